// Read-only code pane state: file text, gutter markers, remote selections.
import { HighlightMarker } from "./types";
import { CodePane, ViewModel, visibleTextSelections } from "./viewmodel";

export function openFile(
  pane: CodePane,
  file: string,
  text: string,
  markers: HighlightMarker[],
  scrollLine: number | null
): CodePane {
  return { file, lines: text.split("\n"), markers, scrollLine };
}

export function markerForLine(pane: CodePane, line: number): HighlightMarker | null {
  return pane.markers.find((m) => m.line === line) ?? null;
}

/** Remote selection overlays for the open file, keyed by user. */
export function overlaysFor(vm: ViewModel): Record<string, any> {
  const overlays: Record<string, any> = {};
  if (!vm.codePane.file) return overlays;
  for (const [user, sel] of Object.entries(visibleTextSelections(vm))) {
    if (sel.file === vm.codePane.file) {
      overlays[user] = sel.range;
    }
  }
  return overlays;
}
