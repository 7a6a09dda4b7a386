/** Steering actions: translate UI intents into gateway step requests.
 *
 * Each action produces exactly the step JSON the gateway documents; the
 * caller POSTs it and re-renders from the confirmed server state (no
 * optimistic updates).
 */

import {ViewState} from './state.js';
import {StepRequest} from './types.js';

export interface TestContext {
  factor: string;
  levelA: string;
  levelB: string;
  variant?: 'pooled' | 'welch';
}

export type SteerAction =
    |{type: 'set-filter-n'; n: number}
    |{type: 'set-alpha'; alpha: number; test: TestContext}
    |{type: 'group-center-selected'}
    |{type: 'remove-selected'; label: string}
    |{type: 'run-isomap'}
    |{type: 'undo'};

export type SteerRequest = {kind: 'step'; body: StepRequest}|{kind: 'undo'};

export class SteerError extends Error {}

export function steer(view: ViewState, action: SteerAction): SteerRequest {
  switch (action.type) {
    case 'set-filter-n':
      if (!Number.isInteger(action.n) || action.n < 1) {
        throw new SteerError(`variance keep-count must be >= 1, got ${action.n}`);
      }
      return {kind: 'step', body: {kind: 'variance_filter', params: {n: action.n}}};
    case 'set-alpha': {
      if (!(action.alpha > 0 && action.alpha < 1)) {
        throw new SteerError(`significance level must lie in (0, 1), got ${action.alpha}`);
      }
      const {factor, levelA, levelB, variant} = action.test;
      return {
        kind: 'step',
        body: {
          kind: 't_test',
          params: {
            factor,
            level_a: levelA,
            level_b: levelB,
            variant: variant ?? 'pooled',
            alpha: action.alpha,
          },
        },
      };
    }
    case 'group-center-selected':
      if (view.selectedSamples.length === 0) {
        throw new SteerError('select the artifact cluster before group-centering');
      }
      return {
        kind: 'step',
        body: {
          kind: 'group_center',
          params: {sample_ids: [...view.selectedSamples].sort()},
        },
      };
    case 'remove-selected':
      if (view.selectedSamples.length === 0) {
        throw new SteerError('select the samples to remove first');
      }
      return {
        kind: 'step',
        body: {
          kind: 'remove_samples',
          params: {
            sample_ids: [...view.selectedSamples].sort(),
            label: action.label,
          },
        },
      };
    case 'run-isomap':
      return {
        kind: 'step',
        body: {
          kind: 'isomap',
          params: {
            k: view.controls.isomapK,
            components: [...view.axes].sort((a, b) => a - b),
            on_disconnect: 'error',
          },
        },
      };
    case 'undo':
      return {kind: 'undo'};
  }
}
