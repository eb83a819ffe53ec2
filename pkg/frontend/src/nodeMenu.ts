import { citekeyRequired, typeByShortcut } from "./grammar.js";
import type { GrammarDoc, NodeTypeDef } from "./types.js";

/** A text range the user selected inside one block, in byte offsets. */
export interface Selection {
  blockId: string;
  span: [number, number];
  text: string;
}

export type MenuState =
  | { step: "choose-type"; selection: Selection }
  | { step: "citekey"; selection: Selection; nodeType: NodeTypeDef }
  | {
      step: "ready";
      selection: Selection;
      nodeType: NodeTypeDef;
      citekey: string | null;
    }
  | { step: "cancelled" };

/**
 * The popup that turns a selected span into a discourse node.
 *
 * It walks a tiny state machine: pick a type (by shortcut letter or id),
 * then supply a citekey when the type's title format calls for one, then
 * the formalize request is ready.  Cancelling at any point produces no
 * mutation at all; only the final request ever touches the service.
 */
export function openMenu(selection: Selection): MenuState {
  return { step: "choose-type", selection };
}

export function cancel(): MenuState {
  return { step: "cancelled" };
}

/** Pick a node type; unknown keys leave the menu unchanged. */
export function chooseType(
  state: MenuState,
  grammar: GrammarDoc,
  key: string,
): MenuState {
  if (state.step !== "choose-type") return state;
  const picked = typeByShortcut(grammar, key);
  if (!picked) return state;
  if (citekeyRequired(picked)) {
    return { step: "citekey", selection: state.selection, nodeType: picked };
  }
  return {
    step: "ready",
    selection: state.selection,
    nodeType: picked,
    citekey: null,
  };
}

/**
 * Supply the citekey the chosen type needs.  A leading @ is stripped so
 * users can paste either spelling; an empty value keeps the prompt open.
 */
export function provideCitekey(state: MenuState, raw: string): MenuState {
  if (state.step !== "citekey") return state;
  const citekey = raw.trim().replace(/^@/, "");
  if (citekey === "") return state;
  return {
    step: "ready",
    selection: state.selection,
    nodeType: state.nodeType,
    citekey,
  };
}

/** The wire body for POST /formalize, or null while the menu is unfinished. */
export function formalizeRequest(
  state: MenuState,
  generation: number,
): {
  blockId: string;
  span: [number, number];
  nodeType: string;
  citekey: string | null;
  generation: number;
} | null {
  if (state.step !== "ready") return null;
  return {
    blockId: state.selection.blockId,
    span: state.selection.span,
    nodeType: state.nodeType.id,
    citekey: state.citekey,
    generation,
  };
}

/**
 * Convert a character range inside a block's text to the byte span the
 * service expects.  DOM selections count UTF-16 code units; the notebook
 * files are UTF-8, so any text beyond ASCII makes the two disagree.
 */
export function byteSpan(
  text: string,
  startChar: number,
  endChar: number,
): [number, number] {
  const encoder = new TextEncoder();
  const start = encoder.encode(text.slice(0, startChar)).length;
  const end = start + encoder.encode(text.slice(startChar, endChar)).length;
  return [start, end];
}

/** The inverse direction: map a byte span from the service back to
 * character offsets, so reference spans can slice the rendered string. */
export function charSpanFromBytes(
  text: string,
  span: [number, number],
): [number, number] {
  const encoder = new TextEncoder();
  let byteAt = 0;
  let startChar = text.length;
  let endChar = text.length;
  let seenStart = false;
  for (let i = 0; i < text.length; ) {
    if (!seenStart && byteAt >= span[0]) {
      startChar = i;
      seenStart = true;
    }
    if (byteAt >= span[1]) {
      endChar = i;
      break;
    }
    const codePoint = text.codePointAt(i) ?? 0;
    byteAt += encoder.encode(String.fromCodePoint(codePoint)).length;
    i += codePoint > 0xffff ? 2 : 1;
  }
  if (!seenStart && byteAt >= span[0]) startChar = text.length;
  return [startChar, endChar];
}
