import { ApiFault } from "./api.js";

export function el<T extends HTMLElement>(id: string): T {
  const e = document.getElementById(id);
  if (!e) throw new Error(`missing element: ${id}`);
  return e as T;
}

export function make<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.innerText = text;
  return node;
}

export function clear(node: HTMLElement): void {
  node.innerHTML = "";
}

export function pill(text: string, tone: "ok" | "warn" | "bad" | "plain"): HTMLSpanElement {
  return make("span", `pill ${tone}`, text);
}

export function emptyNote(root: HTMLElement, text: string): void {
  root.appendChild(make("p", "empty", text));
}

export function errorMessage(e: unknown): string {
  if (e instanceof ApiFault) {
    return `${e.body.code}: ${e.body.message}`;
  }
  return e instanceof Error ? e.message : "unknown error";
}

export function prettyJson(v: unknown): string {
  try {
    return JSON.stringify(v, null, 2);
  } catch {
    return String(v);
  }
}
