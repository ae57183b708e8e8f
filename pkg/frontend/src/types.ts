/** Wire types for the exploration service API. */

export interface Box {
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
}

export interface ObjectItem {
  detection_id: string;
  label: string;
  category: string;
  confidence: number;
  artwork_id: string;
  box: Box;
  crop_url: string | null;
  crop_width: number | null;
  crop_height: number | null;
}

export interface CategoryEntry {
  category: string;
  object_count: number;
  representative: ObjectItem | null;
}

export interface CategoriesResponse {
  categories: CategoryEntry[];
}

export interface HomeResponse {
  examples: ObjectItem[];
}

export interface ObjectsPage {
  items: ObjectItem[];
  next_cursor: string | null;
  total: number;
}

export interface ArtworkDetail {
  id: string;
  title: string;
  artist: string;
  technique: string;
  production_year: [number, number] | null;
  palette: string[] | null;
  image_url: string | null;
  image_width: number | null;
  image_height: number | null;
}

export interface PaintingDetail {
  artwork: ArtworkDetail;
  objects: ObjectItem[];
}

export interface Session {
  session_id: string;
  created_at: number;
}

export interface FavoritesResponse {
  favorites: ObjectItem[];
}

export interface UsedObject {
  detection_id: string;
  label: string;
  artwork_id: string;
  crop_url: string;
}

export interface Generation {
  job_id: string;
  status: "queued" | "running" | "done" | "failed";
  image_url: string | null;
  used_objects: UsedObject[] | null;
  error: string | null;
}

export interface PlacementRequest {
  detection_id: string;
  x: number;
  y: number;
  scale: number;
}

export interface UsageReport {
  per_screen_avg_duration: Record<string, number>;
  category_visits: Record<string, number>;
  saves_per_session: {
    sessions: number;
    total: number;
    mean: number;
    median: number;
    min: number;
    max: number;
  };
  warnings: number;
}
