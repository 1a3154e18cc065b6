/** Keyboard shortcuts: labeling must be fast enough for long queues. */

export type UiAction =
  | { kind: "verdict"; verdict: "good" | "erroneous" }
  | { kind: "toggle-play" }
  | { kind: "step"; delta: 1 | -1 }
  | { kind: "next-case" };

export function actionForKey(key: string): UiAction | null {
  switch (key) {
    case "g":
    case "G":
      return { kind: "verdict", verdict: "good" };
    case "e":
    case "E":
      return { kind: "verdict", verdict: "erroneous" };
    case " ":
      return { kind: "toggle-play" };
    case "ArrowRight":
      return { kind: "step", delta: 1 };
    case "ArrowLeft":
      return { kind: "step", delta: -1 };
    case "n":
    case "N":
      return { kind: "next-case" };
    default:
      return null;
  }
}
