/** Screen navigation state: enforces the app's navigation graph and emits
 * well-paired screen_enter/screen_leave events for the backend log. */

export type Screen = "Home" | "Category" | "Object" | "Painting" | "Favorites" | "Canvas";

export const SCREENS: readonly Screen[] = [
  "Home",
  "Category",
  "Object",
  "Painting",
  "Favorites",
  "Canvas",
];

/** Allowed forward edges. The three persistent nav targets (Home,
 * Favorites, Canvas) are reachable from everywhere; content flows are
 * Home -> Category -> Object -> Painting -> Object/Painting, and
 * Favorites/Canvas link back into Painting and Object. */
const EDGES: Record<Screen, readonly Screen[]> = {
  Home: ["Category", "Favorites", "Canvas"],
  Category: ["Object", "Home", "Favorites", "Canvas"],
  Object: ["Painting", "Category", "Home", "Favorites", "Canvas"],
  Painting: ["Object", "Painting", "Category", "Home", "Favorites", "Canvas"],
  Favorites: ["Canvas", "Painting", "Object", "Category", "Home"],
  Canvas: ["Favorites", "Painting", "Object", "Category", "Home"],
};

export interface ScreenEvent {
  kind: "screen_enter" | "screen_leave";
  ts: number;
  payload: { screen: Screen; category?: string };
}

export interface ViewStateOptions {
  now?: () => number;
  sink?: (event: ScreenEvent) => void;
}

export class ViewState {
  private currentScreen: Screen | null = null;
  readonly events: ScreenEvent[] = [];
  private readonly now: () => number;
  private readonly sink?: (event: ScreenEvent) => void;

  constructor(options: ViewStateOptions = {}) {
    this.now = options.now ?? (() => Date.now() / 1000);
    this.sink = options.sink;
  }

  get current(): Screen | null {
    return this.currentScreen;
  }

  private emit(kind: ScreenEvent["kind"], screen: Screen, category?: string): void {
    const payload: ScreenEvent["payload"] = { screen };
    if (category !== undefined) payload.category = category;
    const event: ScreenEvent = { kind, ts: this.now(), payload };
    this.events.push(event);
    this.sink?.(event);
  }

  /** First entry into the app (no screen to leave). */
  start(): void {
    if (this.currentScreen !== null) return;
    this.currentScreen = "Home";
    this.emit("screen_enter", "Home");
  }

  canNavigate(to: Screen): boolean {
    if (this.currentScreen === null) return to === "Home";
    return EDGES[this.currentScreen].includes(to);
  }

  /** Move to another screen, emitting a leave/enter pair. Object-screen
   * entries carry the category so visit counts can be aggregated.
   * Returns false (and emits nothing) for moves outside the graph. */
  navigate(to: Screen, detail: { category?: string } = {}): boolean {
    if (this.currentScreen === null) {
      if (to !== "Home") return false;
      this.start();
      return true;
    }
    if (!EDGES[this.currentScreen].includes(to)) return false;
    this.emit("screen_leave", this.currentScreen);
    this.currentScreen = to;
    this.emit("screen_enter", to, to === "Object" ? detail.category : undefined);
    return true;
  }

  /** Close the current screen (page unload). */
  end(): void {
    if (this.currentScreen === null) return;
    this.emit("screen_leave", this.currentScreen);
    this.currentScreen = null;
  }
}

/** Check that every enter has a matching later leave (per screen, LIFO)
 * and no leave arrives unmatched; used by tests and debug tooling. */
export function wellPaired(events: readonly ScreenEvent[]): boolean {
  const open: Partial<Record<Screen, number>> = {};
  for (const event of events) {
    const screen = event.payload.screen;
    if (event.kind === "screen_enter") {
      open[screen] = (open[screen] ?? 0) + 1;
    } else {
      if (!open[screen]) return false;
      open[screen] = (open[screen] ?? 0) - 1;
    }
  }
  return Object.values(open).every((n) => n === 0);
}
