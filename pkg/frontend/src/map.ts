/**
 * Map widget: slippy map with marker placement, default/satellite layer
 * toggle, keyword search through a pluggable geocoder, and the default
 * zoom of 16 restored whenever a new question loads.
 *
 * The leaflet module is injected so tests can substitute a stub; the
 * widget itself only sequences calls.
 */

import type * as L from "leaflet";

import { GeoPoint } from "./api";
import { SessionController } from "./session";

export interface MapConfig {
  tileUrl: string;
  satelliteTileUrl: string;
  geocoderUrl: string;
  center: GeoPoint;
  attribution?: string;
}

export const DEFAULT_QUESTION_ZOOM = 16;

export interface GeocoderResult {
  lat: string | number;
  lon: string | number;
}

type LeafletModule = typeof L;

export class MapView {
  private map: L.Map;
  private baseLayer: L.TileLayer;
  private satelliteLayer: L.TileLayer;
  private marker: L.Marker | null = null;
  private satellite = false;
  private lastQuestionIndex = -1;

  constructor(
    container: HTMLElement,
    private readonly config: MapConfig,
    private readonly controller: SessionController,
    private readonly leaflet: LeafletModule,
    private readonly fetchFn: (url: string) => Promise<Response> = (url) => fetch(url),
  ) {
    this.map = leaflet.map(container, {
      center: [config.center.lat, config.center.lon],
      zoom: DEFAULT_QUESTION_ZOOM,
      doubleClickZoom: false, // double-activation drops a marker instead
    });
    this.baseLayer = leaflet.tileLayer(config.tileUrl, {
      attribution: config.attribution ?? "",
    });
    this.satelliteLayer = leaflet.tileLayer(config.satelliteTileUrl, {
      attribution: config.attribution ?? "",
    });
    this.baseLayer.addTo(this.map);

    this.map.on("click", (event: L.LeafletMouseEvent) => {
      this.controller.placeMarker({ lat: event.latlng.lat, lon: event.latlng.lng });
    });
    // keyboard/double-tap activation without pointer coordinates: place
    // the marker at the map center
    this.map.on("dblclick", () => {
      const center = this.map.getCenter();
      this.controller.placeMarker({ lat: center.lat, lon: center.lng });
    });
    controller.onChange((state) => {
      this.syncMarker(state.pendingMarker);
      if (state.phase === "answering" && state.currentIndex !== this.lastQuestionIndex) {
        this.lastQuestionIndex = state.currentIndex;
        this.map.setZoom(DEFAULT_QUESTION_ZOOM);
      }
    });
  }

  private syncMarker(pending: GeoPoint | null): void {
    if (pending === null) {
      if (this.marker !== null) {
        this.marker.remove();
        this.marker = null;
      }
      return;
    }
    if (this.marker === null) {
      this.marker = this.leaflet.marker([pending.lat, pending.lon]).addTo(this.map);
    } else {
      this.marker.setLatLng([pending.lat, pending.lon]);
    }
  }

  /** Toggle default/satellite imagery; the choice persists across questions. */
  toggleLayer(): boolean {
    this.satellite = !this.satellite;
    if (this.satellite) {
      this.baseLayer.remove();
      this.satelliteLayer.addTo(this.map);
    } else {
      this.satelliteLayer.remove();
      this.baseLayer.addTo(this.map);
    }
    return this.satellite;
  }

  get satelliteMode(): boolean {
    return this.satellite;
  }

  /** Geocode a keyword and recenter on the first hit. Returns the hit. */
  async search(query: string): Promise<GeoPoint | null> {
    const url = `${this.config.geocoderUrl}?q=${encodeURIComponent(query)}&format=json&limit=1`;
    const response = await this.fetchFn(url);
    if (!response.ok) throw new Error(`geocoder failed with status ${response.status}`);
    const results = (await response.json()) as GeocoderResult[];
    const hit = results[0];
    if (!hit) return null;
    const point = { lat: Number(hit.lat), lon: Number(hit.lon) };
    this.map.setView([point.lat, point.lon], this.map.getZoom());
    return point;
  }
}
