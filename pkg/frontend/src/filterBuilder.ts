/**
 * Structured filter-builder widget model.
 *
 * The builder and the raw-text box emit the same grammar the server's
 * parser accepts; the emitted string is sent to `GET /filters/parse`,
 * whose canonical rendering becomes the grid's active filter text.
 */

export const TEXT_FIELDS = ["surface", "lemma", "pos", "head", "expansion"] as const;
export const NUMERIC_FIELDS = ["occ", "words"] as const;
export const TEXT_OPS = ["=", "!=", "~"] as const;
export const NUMERIC_OPS = ["=", "!=", ">=", "<=", ">", "<"] as const;

export type TextField = (typeof TEXT_FIELDS)[number];
export type NumericField = (typeof NUMERIC_FIELDS)[number];
export type TextOp = (typeof TEXT_OPS)[number];
export type NumericOp = (typeof NUMERIC_OPS)[number];

export type BuilderNode =
  | { kind: "all" }
  | { kind: "visible"; value: boolean }
  | { kind: "field"; field: TextField; op: TextOp; value: string }
  | { kind: "field"; field: NumericField; op: NumericOp; value: number }
  | { kind: "status"; user: string; label: string }
  | { kind: "sharedhead"; termId: string }
  | { kind: "sharedexp"; termId: string }
  | { kind: "subterms"; inner: BuilderNode }
  | { kind: "not"; inner: BuilderNode }
  | { kind: "group"; joiner: "and" | "or"; items: BuilderNode[] };

/** Grammar string literal: backslash-escape backslashes and quotes. */
export function quote(s: string): string {
  return '"' + s.replace(/\\/g, "\\\\").replace(/"/g, '\\"') + '"';
}

/**
 * Render a widget state as filter-grammar text.
 *
 * Nested groups are always parenthesized, so operator precedence never
 * depends on the joiner; the server's canonical form may drop redundant
 * parentheses, which is fine — equivalence is checked by round-tripping
 * through the server parser, never re-implemented here.
 */
export function emitFilterText(node: BuilderNode): string {
  switch (node.kind) {
    case "all":
      return "all";
    case "visible":
      return `visible(${node.value ? "true" : "false"})`;
    case "field": {
      const v = typeof node.value === "number" ? String(node.value) : quote(node.value);
      return `${node.field} ${node.op} ${v}`;
    }
    case "status":
      return `status(${quote(node.user)}, ${quote(node.label)})`;
    case "sharedhead":
      return `sharedhead(${quote(node.termId)})`;
    case "sharedexp":
      return `sharedexp(${quote(node.termId)})`;
    case "subterms":
      return `subterms(${emitFilterText(node.inner)})`;
    case "not": {
      const inner = emitFilterText(node.inner);
      return node.inner.kind === "group" ? `not (${inner})` : `not ${inner}`;
    }
    case "group": {
      const sep = node.joiner === "and" ? " and " : " or ";
      return node.items
        .map((item) => {
          const s = emitFilterText(item);
          return item.kind === "group" ? `(${s})` : s;
        })
        .join(sep);
    }
  }
}
