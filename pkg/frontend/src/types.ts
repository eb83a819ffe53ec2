/**
 * Wire types for the dgw HTTP service.
 *
 * Every shape here mirrors a JSON body the service actually produces; the
 * recorded fixtures under test/fixtures are the reference copies.  The UI
 * never derives graph facts on its own, so these types are the whole
 * vocabulary it works with.
 */

export interface NodeTypeDef {
  id: string;
  label: string;
  format: string;
  shortcut: string;
  color: string;
  template: string[];
}

export interface PatternDef {
  variables: string[];
  clauses: string[][];
}

export interface RelationTypeDef {
  id: string;
  label: string;
  complement: string;
  sourceType: string;
  destinationType: string;
  patterns: PatternDef[];
}

export interface AttributeDef {
  nodeType: string;
  name: string;
  expr: string;
}

export interface GrammarDoc {
  nodeTypes: NodeTypeDef[];
  relationTypes: RelationTypeDef[];
  markers: Record<string, string>;
  attributes: AttributeDef[];
}

export interface NodeSummary {
  title: string;
  type: string;
  content: string;
  citekey: string | null;
  virtual: boolean;
  order: number;
}

export interface Anchor {
  relation: string;
  variant: number;
  bindings: Record<string, string>;
}

export interface ContextEntry {
  direction: "incoming" | "outgoing";
  label: string;
  other: string;
  anchors: Anchor[];
}

export interface ContextResponse {
  title: string;
  entries: ContextEntry[];
}

export interface OverlayResponse {
  title: string;
  relationCount: number;
  referenceCount: number | null;
  attributes: Record<string, number>;
}

export interface RefOut {
  kind: "page-ref" | "tag-ref" | "block-ref";
  target: string;
  span: [number, number];
}

export interface BlockOut {
  id: string;
  text: string;
  refs: RefOut[];
  children: BlockOut[];
}

export interface PageResponse {
  title: string;
  virtual: boolean;
  blocks: BlockOut[];
}

export interface QueryResponse {
  columns: string[];
  rows: (string | number | null)[][];
}

export interface EditOut {
  kind: "insert" | "set-text" | "create-page";
  page: string;
  parent: string | null;
  index: number | null;
  text: string | null;
}

export interface FormalizeResponse {
  title: string;
  existing: boolean;
  edits: EditOut[];
  generation: number;
}

export interface RealizeResponse {
  edits: EditOut[];
  generation: number;
}

export interface ExportNode {
  title: string;
  type: string;
  content: string;
  citekey: string | null;
  virtual: boolean;
}

export interface ExportEdge {
  source: string;
  label: string;
  destination: string;
  anchors: Anchor[];
}

export interface GraphArchive {
  nodes: ExportNode[];
  edges: ExportEdge[];
  grammar: { doc: GrammarDoc; hash: string };
}
