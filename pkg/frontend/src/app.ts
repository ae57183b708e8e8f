/** Screen rendering and interaction wiring.
 *
 * One App instance owns the API client, the anonymous session, the
 * navigation state (which logs screen events), and the working canvas
 * composition. Screens render into a single root element; the nav bar
 * is persistent.
 */

import { ApiClient, ApiError } from "./api.js";
import { CompositionModel } from "./canvasModel.js";
import { boxToDisplay, containLayout } from "./overlay.js";
import { pollGeneration } from "./polling.js";
import { Screen, ViewState } from "./state.js";
import type { CategoryEntry, Generation, ObjectItem, PaintingDetail } from "./types.js";

const CANVAS_HELP_KEY = "artexplore-canvas-help-seen";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

export class App {
  private readonly view: ViewState;
  private sessionId: string | null = null;
  private favoriteIds = new Set<string>();
  private readonly composition = new CompositionModel(1024);
  private readonly cropSizes = new Map<string, { w: number; h: number }>();
  private lastGeneration: Generation | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    this.view = new ViewState({
      sink: (event) => {
        if (!this.sessionId) return;
        this.api
          .postEvent({ session_id: this.sessionId, ts: event.ts, kind: event.kind, payload: event.payload })
          .catch(() => undefined);
      },
    });
  }

  async start(): Promise<void> {
    const session = await this.api.createSession();
    this.sessionId = session.session_id;
    window.addEventListener("beforeunload", () => this.view.end());
    this.renderChrome();
    this.view.start();
    await this.showHome();
  }

  private go(to: Screen, detail: { category?: string } = {}): boolean {
    return this.view.navigate(to, detail);
  }

  // -- chrome ---------------------------------------------------------------

  private renderChrome(): void {
    this.root.replaceChildren();
    const nav = el("nav", { class: "topbar" });
    const brand = el("button", { class: "brand" }, "artexplore");
    brand.onclick = () => {
      if (this.go("Home")) void this.showHome(false);
    };
    const favorites = el("button", { class: "navlink" }, "Favorites");
    favorites.onclick = () => {
      if (this.go("Favorites")) void this.showFavorites(false);
    };
    const canvas = el("button", { class: "navlink" }, "Canvas");
    canvas.onclick = () => {
      if (this.go("Canvas")) void this.showCanvas(false);
    };
    nav.append(brand, el("div", { class: "spacer" }), favorites, canvas);
    this.root.append(nav, el("main", { id: "screen" }));
  }

  private screenRoot(): HTMLElement {
    return this.root.querySelector("#screen") as HTMLElement;
  }

  private setScreen(...children: (Node | string)[]): HTMLElement {
    const screen = this.screenRoot();
    screen.replaceChildren(...children);
    return screen;
  }

  private objectTile(item: ObjectItem, onOpen?: () => void): HTMLElement {
    const tile = el("figure", { class: "tile" });
    if (item.crop_url) {
      const img = el("img", { src: this.api.url(item.crop_url), alt: item.label, loading: "lazy" });
      img.onclick = () => onOpen?.();
      tile.append(img);
    }
    const caption = el("figcaption", {}, item.label);
    const save = el(
      "button",
      { class: "save", title: "save to favorites" },
      this.favoriteIds.has(item.detection_id) ? "♥" : "♡",
    );
    save.onclick = async (evt) => {
      evt.stopPropagation();
      await this.toggleFavorite(item, save);
    };
    caption.append(save);
    tile.append(caption);
    return tile;
  }

  private async toggleFavorite(item: ObjectItem, button: HTMLElement): Promise<void> {
    if (!this.sessionId) return;
    const saved = this.favoriteIds.has(item.detection_id);
    const ts = Date.now() / 1000;
    if (saved) {
      await this.api.unsaveFavorite(this.sessionId, item.detection_id);
      this.favoriteIds.delete(item.detection_id);
      void this.api
        .postEvent({
          session_id: this.sessionId,
          ts,
          kind: "unsave_object",
          payload: { object_id: item.detection_id },
        })
        .catch(() => undefined);
    } else {
      await this.api.saveFavorite(this.sessionId, item.detection_id);
      this.favoriteIds.add(item.detection_id);
      void this.api
        .postEvent({
          session_id: this.sessionId,
          ts,
          kind: "save_object",
          payload: { object_id: item.detection_id },
        })
        .catch(() => undefined);
    }
    button.textContent = this.favoriteIds.has(item.detection_id) ? "♥" : "♡";
  }

  private errorBox(error: unknown, retry: () => void): HTMLElement {
    const message =
      error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    const box = el("div", { class: "error" }, el("p", {}, `Something went wrong (${message}).`));
    const button = el("button", {}, "Retry");
    button.onclick = retry;
    box.append(button);
    return box;
  }

  // -- screens -----------------------------------------------------------------

  async showHome(navigate = false): Promise<void> {
    if (navigate && !this.go("Home")) return;
    try {
      const home = await this.api.getHome();
      const slider = el("div", { class: "slider" });
      for (const item of home.examples) {
        slider.append(this.objectTile(item));
      }
      const start = el("button", { class: "primary" }, "Start Exploring");
      start.onclick = () => {
        if (this.go("Category")) void this.showCategories(false);
      };
      this.setScreen(
        el("section", { class: "home" },
          el("h1", {}, "Enter the collection through its details"),
          el("p", {}, "Objects found in the paintings are your doorway: browse them, keep the ones you love, and compose something new."),
          slider,
          start,
        ),
      );
    } catch (error) {
      this.setScreen(this.errorBox(error, () => void this.showHome(false)));
    }
  }

  async showCategories(navigate = false): Promise<void> {
    if (navigate && !this.go("Category")) return;
    try {
      const response = await this.api.getCategories();
      const grid = el("div", { class: "grid categories" });
      for (const entry of response.categories) {
        grid.append(this.categoryCard(entry));
      }
      this.setScreen(el("h1", {}, "Categories"), grid);
    } catch (error) {
      this.setScreen(this.errorBox(error, () => void this.showCategories(false)));
    }
  }

  private categoryCard(entry: CategoryEntry): HTMLElement {
    const card = el("button", { class: "card" });
    if (entry.representative?.crop_url) {
      card.append(el("img", { src: this.api.url(entry.representative.crop_url), alt: entry.category }));
    } else {
      card.append(el("div", { class: "placeholder" }, "–"));
    }
    card.append(el("span", { class: "name" }, entry.category));
    card.append(el("span", { class: "count" }, String(entry.object_count)));
    card.onclick = () => {
      if (this.go("Object", { category: entry.category })) {
        void this.showObjects(entry.category, undefined, false);
      }
    };
    return card;
  }

  async showObjects(category: string, label?: string, navigate = false): Promise<void> {
    if (navigate && !this.go("Object", { category })) return;
    try {
      const page = await this.api.getObjects({ category, label, page_size: 60 });
      const labels = new Set(page.items.map((item) => item.label));
      const chips = el("div", { class: "chips" });
      const all = el("button", { class: label ? "chip" : "chip active" }, "All");
      all.onclick = () => void this.showObjects(category, undefined, false);
      chips.append(all);
      for (const name of [...labels].sort()) {
        const chip = el("button", { class: name === label ? "chip active" : "chip" }, name);
        chip.onclick = () => void this.showObjects(category, name, false);
        chips.append(chip);
      }
      const grid = el("div", { class: "grid objects" });
      const appendItems = (items: ObjectItem[]) => {
        for (const item of items) {
          grid.append(
            this.objectTile(item, () => {
              if (this.go("Painting")) void this.showPainting(item.artwork_id, false);
            }),
          );
        }
      };
      appendItems(page.items);
      const screen = this.setScreen(
        el("h1", {}, label ? `${category} · ${label}` : category),
        chips,
        grid,
      );
      if (page.next_cursor) {
        const more = el("button", { class: "more" }, "Load more");
        let cursor: string | null = page.next_cursor;
        more.onclick = async () => {
          if (!cursor) return;
          const next = await this.api.getObjects({ category, label, cursor, page_size: 60 });
          appendItems(next.items);
          cursor = next.next_cursor;
          if (!cursor) more.remove();
        };
        screen.append(more);
      }
    } catch (error) {
      this.setScreen(this.errorBox(error, () => void this.showObjects(category, label, false)));
    }
  }

  async showPainting(artworkId: string, navigate = false): Promise<void> {
    if (navigate && !this.go("Painting")) return;
    try {
      const detail = await this.api.getPainting(artworkId);
      this.setScreen(...this.paintingView(detail));
    } catch (error) {
      this.setScreen(this.errorBox(error, () => void this.showPainting(artworkId, false)));
    }
  }

  private paintingView(detail: PaintingDetail): Node[] {
    const artwork = detail.artwork;
    const frame = el("div", { class: "painting-frame" });
    if (artwork.image_url) {
      const img = el("img", { src: this.api.url(artwork.image_url), alt: artwork.title });
      frame.append(img);
      const placeOverlays = () => {
        frame.querySelectorAll(".overlay-box").forEach((n) => n.remove());
        const naturalW = artwork.image_width ?? img.naturalWidth;
        const naturalH = artwork.image_height ?? img.naturalHeight;
        if (!naturalW || !naturalH) return;
        const layout = containLayout(naturalW, naturalH, frame.clientWidth, frame.clientHeight);
        for (const object of detail.objects) {
          const rect = boxToDisplay(object.box, layout);
          const boxEl = el("div", { class: "overlay-box", title: object.label });
          boxEl.style.left = `${rect.left}px`;
          boxEl.style.top = `${rect.top}px`;
          boxEl.style.width = `${rect.width}px`;
          boxEl.style.height = `${rect.height}px`;
          boxEl.append(el("span", {}, object.label));
          frame.append(boxEl);
        }
      };
      img.onload = placeOverlays;
      new ResizeObserver(placeOverlays).observe(frame);
    }

    const year = artwork.production_year
      ? artwork.production_year[0] === artwork.production_year[1]
        ? String(artwork.production_year[0])
        : `${artwork.production_year[0]}–${artwork.production_year[1]}`
      : "unknown year";
    const meta = el(
      "aside",
      { class: "painting-meta" },
      el("h1", {}, artwork.title || "Untitled"),
      el("p", { class: "artist" }, artwork.artist || "Unknown artist"),
      el("p", {}, `${artwork.technique || "Unknown technique"} · ${year}`),
    );
    if (artwork.palette?.length) {
      const swatches = el("div", { class: "palette" });
      for (const color of artwork.palette) {
        const swatch = el("span", { class: "swatch", title: color });
        swatch.style.background = color;
        swatches.append(swatch);
      }
      meta.append(swatches);
    }

    const others = el("div", { class: "grid objects small" });
    for (const object of detail.objects) {
      if (!object.crop_url) continue;
      others.append(
        this.objectTile(object, () => {
          if (this.go("Object", { category: object.category })) {
            void this.showObjects(object.category, object.label, false);
          }
        }),
      );
    }
    return [
      el("section", { class: "painting" }, frame, meta),
      el("h2", {}, "Objects on this painting"),
      others,
    ];
  }

  async showFavorites(navigate = false): Promise<void> {
    if (navigate && !this.go("Favorites")) return;
    if (!this.sessionId) return;
    try {
      const response = await this.api.getFavorites(this.sessionId);
      this.favoriteIds = new Set(response.favorites.map((f) => f.detection_id));
      const grid = el("div", { class: "grid objects" });
      for (const item of response.favorites) {
        const tile = this.objectTile(item, () => {
          if (this.go("Painting")) void this.showPainting(item.artwork_id, false);
        });
        const use = el("button", { class: "use" }, "Place on canvas");
        use.onclick = () => {
          this.addToComposition(item);
          if (this.go("Canvas")) void this.showCanvas(false);
        };
        tile.append(use);
        grid.append(tile);
      }
      this.setScreen(
        el("h1", {}, "Favorites"),
        response.favorites.length ? grid : el("p", {}, "Nothing saved yet — tap ♡ on any object."),
      );
    } catch (error) {
      this.setScreen(this.errorBox(error, () => void this.showFavorites(false)));
    }
  }

  private addToComposition(item: ObjectItem): void {
    // prefer the stored crop's true pixel size; fractional boxes round
    // outward at crop time, so the box span can be off by a pixel
    const width = item.crop_width ?? Math.max(1, Math.round(item.box.x_max - item.box.x_min));
    const height = item.crop_height ?? Math.max(1, Math.round(item.box.y_max - item.box.y_min));
    this.cropSizes.set(item.detection_id, { w: width, h: height });
    this.composition.add(item.detection_id, width, height);
  }

  async showCanvas(navigate = false): Promise<void> {
    if (navigate && !this.go("Canvas")) return;
    const board = el("div", { class: "board" });
    const factor = 512 / this.composition.side;

    const renderItems = () => {
      board.replaceChildren();
      this.composition.items.forEach((item, index) => {
        const wrapper = el("div", { class: "placed" });
        wrapper.style.left = `${item.x * factor}px`;
        wrapper.style.top = `${item.y * factor}px`;
        wrapper.style.width = `${this.composition.widthOf(index) * factor}px`;
        wrapper.style.height = `${this.composition.heightOf(index) * factor}px`;
        const img = el("img", {
          src: this.api.url(`/crops/${item.detectionId}`),
          draggable: "false",
        });
        wrapper.append(img);
        const handle = el("div", { class: "handle", title: "drag to resize" });
        wrapper.append(handle);
        const remove = el("button", { class: "remove", title: "remove" }, "×");
        remove.onclick = () => {
          this.composition.remove(index);
          renderItems();
        };
        wrapper.append(remove);
        this.wireDrag(wrapper, handle, index, factor, renderItems);
        board.append(wrapper);
      });
    };
    renderItems();

    const promptInput = el("input", {
      type: "text",
      placeholder: "Describe the image's style or theme…",
      value: this.composition.prompt,
    }) as HTMLInputElement;
    promptInput.oninput = () => {
      this.composition.prompt = promptInput.value;
    };
    const status = el("p", { class: "status" });
    const generateButton = el("button", { class: "primary" }, "Generate");
    generateButton.onclick = () => void this.generate(status, generateButton);

    const result = el("div", { class: "result" });
    if (this.lastGeneration?.status === "done" && this.lastGeneration.image_url) {
      result.append(...this.generationView(this.lastGeneration));
    }

    this.setScreen(
      el("h1", {}, "Canvas"),
      el("p", { class: "hint" }, "Drag your saved objects around, resize with the corner handle, leave plenty of white space, then describe the image you want."),
      board,
      el("div", { class: "canvas-controls" }, promptInput, generateButton),
      status,
      result,
    );
    this.maybeShowCanvasHelp();
  }

  private wireDrag(
    wrapper: HTMLElement,
    handle: HTMLElement,
    index: number,
    factor: number,
    rerender: () => void,
  ): void {
    wrapper.addEventListener("pointerdown", (down: PointerEvent) => {
      if (down.target === handle) return;
      down.preventDefault();
      wrapper.setPointerCapture(down.pointerId);
      const item = this.composition.items[index];
      const startX = item.x;
      const startY = item.y;
      const origin = { x: down.clientX, y: down.clientY };
      const onMove = (move: PointerEvent) => {
        this.composition.move(
          index,
          startX + (move.clientX - origin.x) / factor,
          startY + (move.clientY - origin.y) / factor,
        );
        const current = this.composition.items[index];
        wrapper.style.left = `${current.x * factor}px`;
        wrapper.style.top = `${current.y * factor}px`;
      };
      const onUp = () => {
        wrapper.removeEventListener("pointermove", onMove);
        wrapper.removeEventListener("pointerup", onUp);
      };
      wrapper.addEventListener("pointermove", onMove);
      wrapper.addEventListener("pointerup", onUp);
    });
    handle.addEventListener("pointerdown", (down: PointerEvent) => {
      down.preventDefault();
      down.stopPropagation();
      handle.setPointerCapture(down.pointerId);
      const item = this.composition.items[index];
      const startScale = item.scale;
      const startWidth = this.composition.widthOf(index) * factor;
      const origin = down.clientX;
      const onMove = (move: PointerEvent) => {
        const desired = Math.max(8, startWidth + (move.clientX - origin));
        this.composition.setScale(index, (startScale * desired) / startWidth);
        const current = this.composition.items[index];
        wrapper.style.left = `${current.x * factor}px`;
        wrapper.style.top = `${current.y * factor}px`;
        wrapper.style.width = `${this.composition.widthOf(index) * factor}px`;
        wrapper.style.height = `${this.composition.heightOf(index) * factor}px`;
      };
      const onUp = () => {
        handle.removeEventListener("pointermove", onMove);
        handle.removeEventListener("pointerup", onUp);
        rerender();
      };
      handle.addEventListener("pointermove", onMove);
      handle.addEventListener("pointerup", onUp);
    });
  }

  private maybeShowCanvasHelp(): void {
    let seen = "yes";
    try {
      seen = localStorage.getItem(CANVAS_HELP_KEY) ?? "";
    } catch {
      /* storage unavailable: show once per load */
      seen = this.root.dataset.canvasHelpShown ?? "";
    }
    if (seen) return;
    const overlay = el(
      "div",
      { class: "modal" },
      el(
        "div",
        { class: "modal-body" },
        el("h2", {}, "How the canvas works"),
        el("p", {}, "Place saved objects on the square canvas and resize them with the corner handle. The empty white space is filled in by a generative model, guided by your text prompt — position and size of your objects shape the final image."),
      ),
    );
    const ok = el("button", { class: "primary" }, "Got it");
    ok.onclick = () => {
      overlay.remove();
      try {
        localStorage.setItem(CANVAS_HELP_KEY, "yes");
      } catch {
        this.root.dataset.canvasHelpShown = "yes";
      }
    };
    (overlay.firstChild as HTMLElement).append(ok);
    this.screenRoot().append(overlay);
  }

  private async generate(status: HTMLElement, button: HTMLButtonElement): Promise<void> {
    if (!this.sessionId) return;
    status.textContent = "";
    if (!this.composition.items.length) {
      status.textContent = "Place at least one object first.";
      return;
    }
    if (!this.composition.prompt.trim()) {
      status.textContent = "Add a prompt describing style or theme.";
      return;
    }
    button.disabled = true;
    status.textContent = "Generating…";
    try {
      const job = await this.api.submitCanvas(this.sessionId, {
        placements: this.composition.toPlacements(),
        prompt: this.composition.prompt,
        side: this.composition.side,
      });
      void this.api
        .postEvent({
          session_id: this.sessionId,
          ts: Date.now() / 1000,
          kind: "generate_image",
          payload: { job_id: job.job_id },
        })
        .catch(() => undefined);
      const generation = await pollGeneration(this.api, job.job_id);
      this.lastGeneration = generation;
      if (generation.status === "failed") {
        status.textContent = `Generation failed: ${generation.error ?? "unknown error"}`;
      } else {
        status.textContent = "";
        const result = this.screenRoot().querySelector(".result");
        result?.replaceChildren(...this.generationView(generation));
      }
    } catch (error) {
      status.textContent =
        error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    } finally {
      button.disabled = false;
    }
  }

  private generationView(generation: Generation): Node[] {
    const nodes: Node[] = [el("h2", {}, "Your image")];
    if (generation.image_url) {
      nodes.push(el("img", { class: "generated", src: this.api.url(generation.image_url) }));
    }
    if (generation.used_objects?.length) {
      const strip = el("div", { class: "used-objects" });
      for (const used of generation.used_objects) {
        const chip = el("button", { class: "used" });
        chip.append(
          el("img", { src: this.api.url(used.crop_url), alt: used.label }),
          el("span", {}, used.label),
        );
        chip.onclick = () => {
          if (this.go("Painting")) void this.showPainting(used.artwork_id, false);
        };
        strip.append(chip);
      }
      nodes.push(el("p", {}, "Objects used — tap one to revisit its painting:"), strip);
    }
    return nodes;
  }
}
