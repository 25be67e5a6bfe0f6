/**
 * Variant gallery: a grid of cards, each playing its variant's emitted page in a
 * sandboxed iframe, with an edit-prompt form underneath.
 *
 * All animation comes from the emitted pages and all diagnostics from server
 * reports; the client computes nothing. Edits render an optimistic pending card
 * that resolves into the child variant (or disappears, leaving an inline error
 * on the parent, when the server rejects the edit).
 */

import { ApiClient, ApiError, VariantSummary, newRequestId } from "./api.js";

export class Gallery {
  private readonly inFlight = new Set<string>(); // per-variant submission serialized

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly projectId: string,
  ) {}

  async refresh(): Promise<void> {
    let variants: VariantSummary[];
    try {
      variants = await this.api.listVariants(this.projectId);
    } catch (error) {
      this.root.replaceChildren(this.banner(`service unreachable: ${describe(error)}`));
      return;
    }
    this.root.replaceChildren();
    if (variants.length === 0) {
      this.root.appendChild(this.emptyState());
      return;
    }
    const grid = document.createElement("div");
    grid.className = "gallery-grid";
    for (const variant of variants) {
      grid.appendChild(this.renderCard(variant));
    }
    this.root.appendChild(grid);
  }

  private banner(message: string): HTMLElement {
    const el = document.createElement("div");
    el.className = "banner error";
    el.textContent = message;
    return el;
  }

  private emptyState(): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "empty-state";
    const note = document.createElement("p");
    note.textContent = "No variants yet.";
    const button = document.createElement("button");
    button.className = "generate";
    button.textContent = "Generate";
    button.addEventListener("click", async () => {
      button.disabled = true;
      try {
        await this.api.generate(this.projectId, 4);
        await this.refresh();
      } catch (error) {
        wrap.appendChild(this.banner(`generate failed: ${describe(error)}`));
        button.disabled = false;
      }
    });
    wrap.append(note, button);
    return wrap;
  }

  private renderCard(variant: VariantSummary): HTMLElement {
    const card = document.createElement("article");
    card.className = "variant-card";
    card.dataset.variantId = variant.id;

    const frame = document.createElement("iframe");
    frame.setAttribute("sandbox", "allow-scripts");
    frame.src = this.api.pageUrl(variant.id);
    frame.title = `preview of ${variant.id}`;
    frame.className = "preview";
    card.appendChild(frame);

    const header = document.createElement("header");
    const title = document.createElement("span");
    title.className = "variant-id";
    title.textContent = variant.id;
    header.appendChild(title);
    if (!variant.run_solved || variant.open_bugs > 0) {
      const badge = document.createElement("span");
      badge.className = "badge warning";
      badge.textContent = `${variant.open_bugs} unresolved bug${variant.open_bugs === 1 ? "" : "s"}`;
      header.appendChild(badge);
    }
    card.appendChild(header);

    if (variant.parent_variant) {
      const lineage = document.createElement("p");
      lineage.className = "lineage";
      lineage.textContent = `edited from ${variant.parent_variant}`;
      card.appendChild(lineage);
    }

    const concept = document.createElement("p");
    concept.className = "concept";
    concept.textContent = variant.concept_excerpt;
    card.appendChild(concept);

    card.appendChild(this.editForm(variant));
    return card;
  }

  private editForm(variant: VariantSummary): HTMLElement {
    const form = document.createElement("form");
    form.className = "edit-form";
    const input = document.createElement("input");
    input.type = "text";
    input.placeholder = "describe how the animation should change";
    input.name = "prompt";
    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Edit";
    const error = document.createElement("p");
    error.className = "edit-error";
    error.hidden = true;
    form.append(input, submit, error);

    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const prompt = input.value.trim();
      if (!prompt) {
        error.textContent = "enter a prompt first";
        error.hidden = false;
        return; // client-side validation: no request leaves the browser
      }
      error.hidden = true;
      void this.submitEdit(variant.id, prompt, form);
    });
    return form;
  }

  async submitEdit(variantId: string, prompt: string, form?: HTMLElement): Promise<void> {
    if (this.inFlight.has(variantId)) return;
    this.inFlight.add(variantId);
    const pending = this.pendingCard(variantId, prompt);
    this.root.querySelector(".gallery-grid")?.appendChild(pending);
    try {
      await this.api.submitEdit(variantId, prompt, newRequestId());
      await this.refresh(); // server state is the only source of truth
    } catch (error) {
      pending.remove();
      this.showEditError(variantId, describe(error), form);
    } finally {
      this.inFlight.delete(variantId);
    }
  }

  private pendingCard(parentId: string, prompt: string): HTMLElement {
    const card = document.createElement("article");
    card.className = "variant-card pending";
    card.dataset.pendingFor = parentId;
    const note = document.createElement("p");
    note.textContent = `applying "${prompt}" to ${parentId}...`;
    card.appendChild(note);
    return card;
  }

  private showEditError(variantId: string, message: string, form?: HTMLElement): void {
    const card = this.root.querySelector<HTMLElement>(`[data-variant-id="${cssEscape(variantId)}"]`);
    const target = form ?? card;
    if (!target) return;
    const error = target.querySelector<HTMLElement>(".edit-error") ?? document.createElement("p");
    error.className = "edit-error";
    error.textContent = `edit failed: ${message} (try again)`;
    error.hidden = false;
    if (!error.parentElement) target.appendChild(error);
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.message} (HTTP ${error.status})`;
  return error instanceof Error ? error.message : String(error);
}

function cssEscape(value: string): string {
  const css = (globalThis as { CSS?: { escape?: (v: string) => string } }).CSS;
  if (css?.escape) return css.escape(value);
  return value.replace(/["\\#.;:]/g, "\\$&");
}
