/** View state: everything the panels are a pure function of (besides the
 * last server payload). Axis choices are limited to the leading components;
 * selections must reference ids present in the current payload.
 */

import {BiplotPayload} from './types.js';

/** Axis picks may only use this many leading components. */
export const MAX_AXIS_COMPONENT = 6;

export interface ViewControls {
  varianceKeep: number;
  alpha: number;
  isomapK: number;
  /** how many counterpart points a selection highlights */
  highlightCount: number;
}

export interface ViewState {
  sessionId: string;
  /** 2 or 3 of the leading component indices (1-based) */
  axes: number[];
  colorBy: string | null;
  selectedSamples: string[];
  selectedVariables: string[];
  controls: ViewControls;
  /** 3-D projections are rendered through this rotation; ignored for 2-D */
  rotation: {yaw: number; pitch: number};
  /** display scaling of biplot points; "raw" keeps server coordinates */
  pointScale: 'raw' | 'unit';
}

export function initialViewState(sessionId: string): ViewState {
  return {
    sessionId,
    axes: [1, 2, 3],
    colorBy: null,
    selectedSamples: [],
    selectedVariables: [],
    controls: {varianceKeep: 630, alpha: 0.05, isomapK: 2, highlightCount: 5},
    rotation: {yaw: 0.5, pitch: 0.35},
    pointScale: 'raw',
  };
}

export class ViewStateError extends Error {}

/** Check the axes against a payload's component list and the leading-six rule. */
export function validateAxes(axes: number[], payload: BiplotPayload): void {
  if (axes.length !== 2 && axes.length !== 3) {
    throw new ViewStateError(`need 2 or 3 axes, got ${axes.length}`);
  }
  for (const axis of axes) {
    if (!Number.isInteger(axis) || axis < 1 || axis > MAX_AXIS_COMPONENT) {
      throw new ViewStateError(
          `axis ${axis} outside the leading ${MAX_AXIS_COMPONENT} components`);
    }
    if (!payload.components.includes(axis)) {
      throw new ViewStateError(
          `axis ${axis} not in the decomposition payload (${payload.components})`);
    }
  }
}

/** Drop selections that no longer exist in the current payload. */
export function reconcileSelections(view: ViewState,
                                    payload: BiplotPayload): ViewState {
  const samples = new Set(payload.sample_ids);
  const variables = new Set(payload.variable_ids);
  return {
    ...view,
    selectedSamples: view.selectedSamples.filter((id) => samples.has(id)),
    selectedVariables: view.selectedVariables.filter((id) => variables.has(id)),
  };
}

export function toggleSelection(current: string[], id: string): string[] {
  return current.includes(id) ? current.filter((x) => x !== id)
                              : [...current, id];
}

export function clearSelections(view: ViewState): ViewState {
  return {...view, selectedSamples: [], selectedVariables: []};
}
