/**
 * Bootstrap: wire the session controller, map widget, and the DOM.
 *
 * Configuration comes from URL query parameters with sensible defaults:
 *   ?service=http://127.0.0.1:8000&account=alice
 *   &tiles=https://.../{z}/{x}/{y}.png&satellite=...&geocoder=...
 */

import leaflet from "leaflet";
import "leaflet/dist/leaflet.css";

import { ServiceClient } from "./api";
import { MapView } from "./map";
import { buildLayout, updateView } from "./render";
import { SessionController } from "./session";
import "./style.css";

const params = new URLSearchParams(window.location.search);
const config = {
  serviceUrl: params.get("service") ?? "http://127.0.0.1:8000",
  accountId: params.get("account") ?? "demo",
  tileUrl: params.get("tiles") ?? "https://tile.openstreetmap.org/{z}/{x}/{y}.png",
  satelliteTileUrl:
    params.get("satellite") ??
    "https://server.arcgisonline.com/ArcGIS/rest/services/World_Imagery/MapServer/tile/{z}/{y}/{x}",
  geocoderUrl: params.get("geocoder") ?? "https://nominatim.openstreetmap.org/search",
  center: {
    lat: Number(params.get("lat") ?? 45.4215),
    lon: Number(params.get("lon") ?? -75.6972),
  },
};

const root = document.querySelector<HTMLElement>("#app");
if (!root) throw new Error("missing #app container");
const els = buildLayout(root);

const client = new ServiceClient(config.serviceUrl);
const controller = new SessionController(client, config.accountId, window.localStorage);
const map = new MapView(els.map, config, controller, leaflet);

controller.onChange((state) => updateView(els, state, controller.canSubmit));

els.startButton.addEventListener("click", () => void controller.start());
els.retry.addEventListener("click", () => void controller.retry());
els.removeMarker.addEventListener("click", () => controller.removeMarker());
els.next.addEventListener("click", () => void controller.submitCurrent());
els.layerToggle.addEventListener("click", () => {
  els.layerToggle.textContent = map.toggleLayer() ? "Default" : "Satellite";
});
els.searchButton.addEventListener("click", () => {
  const query = els.searchInput.value.trim();
  if (query) void map.search(query);
});

void controller.load();
