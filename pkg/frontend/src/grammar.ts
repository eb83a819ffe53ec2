import type { GrammarDoc, NodeTypeDef, RelationTypeDef } from "./types.js";

/** Look up a node type definition by id. */
export function nodeType(grammar: GrammarDoc, id: string): NodeTypeDef | undefined {
  return grammar.nodeTypes.find((nt) => nt.id === id);
}

/** Color assigned to a node type, or a neutral fallback for unknown ids. */
export function colorOf(grammar: GrammarDoc, typeId: string): string {
  return nodeType(grammar, typeId)?.color ?? "#999999";
}

/** Display label for a relation id, falling back to the id itself. */
export function relationLabel(grammar: GrammarDoc, relationId: string): string {
  return (
    grammar.relationTypes.find((rt) => rt.id === relationId)?.label ?? relationId
  );
}

/**
 * Relations whose declared endpoint types admit an edge from a node of
 * sourceType to a node of destinationType.  This is what the playground
 * relation picker offers, so impossible picks never reach the service.
 */
export function relationsBetween(
  grammar: GrammarDoc,
  sourceType: string,
  destinationType: string,
): RelationTypeDef[] {
  return grammar.relationTypes.filter(
    (rt) => rt.sourceType === sourceType && rt.destinationType === destinationType,
  );
}

/**
 * Every label a context entry can carry: the forward label and the
 * complement of each relation, in declaration order.
 */
export function visibleLabels(grammar: GrammarDoc): string[] {
  const labels: string[] = [];
  for (const rt of grammar.relationTypes) {
    labels.push(rt.label);
    labels.push(rt.complement);
  }
  return labels;
}

/** Whether formalizing as this type needs a citekey to fill its format. */
export function citekeyRequired(nt: NodeTypeDef): boolean {
  return nt.format.includes("{citekey}");
}

/**
 * Resolve a node-type pick from keyboard input: a shortcut letter
 * (case-insensitive) or a full type id.
 */
export function typeByShortcut(
  grammar: GrammarDoc,
  key: string,
): NodeTypeDef | undefined {
  const wanted = key.trim();
  if (wanted === "") return undefined;
  const byLetter = grammar.nodeTypes.find(
    (nt) => nt.shortcut.toLowerCase() === wanted.toLowerCase(),
  );
  if (byLetter) return byLetter;
  return grammar.nodeTypes.find((nt) => nt.id === wanted);
}
