import type { FieldDiff, RecordView, SearchHit } from "./api.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderHits(list: HTMLElement, countEl: HTMLElement,
                           hits: SearchHit[], total: number): void {
  const doc = list.ownerDocument;
  list.textContent = "";
  countEl.textContent = `(${total})`;
  for (const hit of hits) {
    const item = el(doc, "li", "hit");
    item.dataset.id = hit.id;
    item.appendChild(el(doc, "span", "hit-id", hit.id));
    item.appendChild(el(doc, "span", "hit-tissue", hit.tissue ?? "—"));
    item.appendChild(el(doc, "span", `chip chip-${hit.gold_label ?? "unknown"}`,
                        hit.gold_label ?? "unknown"));
    list.appendChild(item);
  }
}

function valueCell(doc: Document, diff: FieldDiff, condition: string): HTMLTableCellElement {
  const cell = el(doc, "td", "value");
  const value = diff.values[condition];
  if (value === null || value === undefined) {
    cell.classList.add("absent");
    cell.appendChild(el(doc, "span", "value-text", "—"));
  } else {
    if (value === "NA") cell.classList.add("missing");
    cell.appendChild(el(doc, "span", "value-text", value));
  }
  const validation = diff.validation[condition];
  if (validation && !validation.conforms && validation.violation) {
    const badge = el(doc, "span", "badge", validation.violation);
    badge.title = `${diff.field_name}: ${validation.violation}`;
    cell.appendChild(badge);
  }
  return cell;
}

/**
 * Two aligned columns, one row per field in the service's order (which
 * preserves record field order); changed rows get the `changed` class.
 */
export function renderCompare(container: HTMLElement, view: RecordView,
                              left: string, right: string): void {
  const doc = container.ownerDocument;
  container.textContent = "";

  const table = el(doc, "table", "compare-table");
  const head = el(doc, "tr");
  head.appendChild(el(doc, "th", undefined, "field"));
  head.appendChild(el(doc, "th", undefined, `original (${left})`));
  head.appendChild(el(doc, "th", undefined, `corrected (${right})`));
  table.appendChild(head);

  for (const diff of view.field_diffs) {
    const row = el(doc, "tr", diff.changed ? "field-row changed" : "field-row");
    row.dataset.field = diff.field_name;
    const leftValue = diff.values[left];
    const rightValue = diff.values[right];
    if (diff.changed && (leftValue === null || leftValue === undefined) && rightValue) {
      row.classList.add("added");
    }
    row.appendChild(el(doc, "th", "field-name", diff.field_name));
    row.appendChild(valueCell(doc, diff, left));
    row.appendChild(valueCell(doc, diff, right));
    table.appendChild(row);
  }
  container.appendChild(table);
}

export function renderMissingRecord(container: HTMLElement, condition: string): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  const note = el(doc, "p", "placeholder missing-record",
                  `record missing in condition ${condition}`);
  container.appendChild(note);
}

export type BannerKind = "error" | "hint";

export function showBanner(banner: HTMLElement, kind: BannerKind, message: string,
                           retryLabel?: string): void {
  banner.textContent = "";
  banner.hidden = false;
  banner.className = `banner banner-${kind}`;
  banner.appendChild(el(banner.ownerDocument, "span", "banner-message", message));
  if (retryLabel) {
    const button = el(banner.ownerDocument, "button", "banner-retry", retryLabel);
    button.type = "button";
    banner.appendChild(button);
  }
}

export function clearBanner(banner: HTMLElement): void {
  banner.textContent = "";
  banner.hidden = true;
  banner.className = "banner";
}
