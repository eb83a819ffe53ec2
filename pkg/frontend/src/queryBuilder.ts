import { visibleLabels } from "./grammar.js";
import type { GrammarDoc } from "./types.js";

export interface ConditionDraft {
  relation: string;
  targetKind: "node" | "type";
  targetValue: string;
}

export interface QueryDraft {
  find: string;
  conditions: ConditionDraft[];
  select: string[];
}

const METADATA_FIELDS = ["title", "content", "citekey", "type"];

export function emptyDraft(find: string): QueryDraft {
  return { find, conditions: [], select: ["title"] };
}

/** Relation labels the condition dropdown offers, straight from the grammar. */
export function labelOptions(grammar: GrammarDoc): string[] {
  return visibleLabels(grammar);
}

/**
 * Fields the select picker offers for a given find type: the metadata
 * fields plus every attribute declared on that type.
 */
export function selectOptions(grammar: GrammarDoc, find: string): string[] {
  const attrs = grammar.attributes
    .filter((a) => a.nodeType === find)
    .map((a) => a.name);
  return [...METADATA_FIELDS, ...attrs];
}

/**
 * Problems that would make the service reject the draft.  Mirrors the
 * service's validation so the form can flag mistakes before submitting,
 * but the service stays the authority; anything missed here still comes
 * back as E_QUERY_VALIDATE.
 */
export function validateDraft(grammar: GrammarDoc, draft: QueryDraft): string[] {
  const problems: string[] = [];
  if (!grammar.nodeTypes.some((nt) => nt.id === draft.find)) {
    problems.push(`unknown node type ${draft.find}`);
  }
  const labels = new Set(visibleLabels(grammar));
  draft.conditions.forEach((cond, i) => {
    if (!labels.has(cond.relation)) {
      problems.push(`condition ${i + 1}: unknown relation ${cond.relation}`);
    }
    if (cond.targetValue.trim() === "") {
      problems.push(`condition ${i + 1}: empty target`);
    }
    if (
      cond.targetKind === "type" &&
      !grammar.nodeTypes.some((nt) => nt.id === cond.targetValue)
    ) {
      problems.push(`condition ${i + 1}: unknown node type ${cond.targetValue}`);
    }
  });
  if (draft.select.length === 0) {
    problems.push("select at least one field");
  }
  const allowed = new Set(selectOptions(grammar, draft.find));
  for (const field of draft.select) {
    if (!allowed.has(field)) {
      problems.push(`${field} is not selectable for ${draft.find}`);
    }
  }
  return problems;
}

/** Assemble the wire document the /query endpoint expects. */
export function buildQuery(draft: QueryDraft): Record<string, unknown> {
  return {
    find: draft.find,
    conditions: draft.conditions.map((cond) => ({
      relation: cond.relation,
      target: { [cond.targetKind]: cond.targetValue },
    })),
    select: [...draft.select],
  };
}
