/** Tiny SVG/DOM helpers shared by the view renderers (no framework). */

const SVG_NS = "http://www.w3.org/2000/svg";

export function svg(tag: string, attrs: Record<string, string | number> = {}): SVGElement {
  const el = document.createElementNS(SVG_NS, tag) as SVGElement;
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

export function html<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  if (text !== undefined) el.textContent = text;
  return el;
}

export function clear(el: Element): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}

/** Sequential color ramp (light to dark blue), k categories. */
export function rampColor(category: number, k: number): string {
  const t = k <= 1 ? 0.8 : 0.15 + (0.75 * category) / (k - 1);
  const c = Math.round(235 - t * 190);
  return `rgb(${c}, ${c + 10}, 255)`;
}

export const HIGHLIGHT = "#1d5fd6";   // filtered counties (blue)
export const MUTED = "#b9bec7";       // unselected lines (gray)
export const PRIMARY_AXIS = "#e07b00"; // primary-variable axes (orange)
export const IMPORTANT = "#1a9b4f";   // high-centrality nodes (green)
export const NODE = "#3b6fd4";        // default node color (blue)
