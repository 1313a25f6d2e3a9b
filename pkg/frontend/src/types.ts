// Server payload shapes; the UI renders these verbatim and computes nothing
// analytic on its own.

export interface LayerJson {
  metric: string;
  scheme: string;
  breaks: number[];
  colors: string[];
  values: Record<string, number>;
}

export interface MarksJson {
  topic: string;
  threshold: number;
  year: number;
  marked: string[];
}

export interface TimeSeriesJson {
  scale: "monthly" | "yearly";
  series: [string, number][];
}

export interface EventJson {
  id: string;
  date: string;
  state: string;
  county: string;
  address: string | null;
  event_type: string;
  report_text: string;
  fips: string;
  lat: number;
  lon: number;
  theta?: number[] | null;
}

export interface EventsJson {
  count: number;
  events: EventJson[];
}

export interface TopicJson {
  topic_id: number;
  label: string;
  top_words: string[];
}

export interface MetaJson {
  events: number;
  models: string[];
  tables: string[];
  topics_by_table: Record<string, string[]>;
}

export interface PolygonFeature {
  type: "Feature";
  geometry: { type: "Polygon"; coordinates: number[][][] };
  properties: { fips: string; name?: string };
}

export interface PolygonsJson {
  type: "FeatureCollection";
  features: PolygonFeature[];
}
