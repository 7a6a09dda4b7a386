/** Browser wiring: one session per tab, strictly server-confirmed steps.
 *
 * Every steering action waits for the gateway's confirmation and then
 * re-renders from freshly fetched state; a rejected step (HTTP 422) surfaces
 * its message and leaves the panels and selections untouched.
 */

import {GatewayClient, GatewayError} from './api.js';
import {
  ViewState,
  initialViewState,
  reconcileSelections,
  toggleSelection,
} from './state.js';
import {renderSynchronizedBiplots} from './scene.js';
import {SteerAction, steer} from './steer.js';
import {BiplotPayload, FactorTable, SessionPayload} from './types.js';

interface AppElements {
  root: HTMLElement;
  status: HTMLElement;
  log: HTMLElement;
}

export class BiplotApp {
  private view: ViewState | null = null;
  private payload: BiplotPayload | null = null;
  private session: SessionPayload | null = null;
  private factors: FactorTable[] = [];
  private busy = false;

  constructor(private readonly client: GatewayClient,
              private readonly el: AppElements) {}

  async open(sessionId: string): Promise<void> {
    this.view = initialViewState(sessionId);
    await this.refresh();
  }

  async createFromPath(datasetPath: string): Promise<void> {
    const created = await this.client.createSession({dataset_path: datasetPath});
    await this.open(created.session_id);
  }

  private async refresh(): Promise<void> {
    if (!this.view) return;
    this.session = await this.client.getSession(this.view.sessionId);
    const rank = Math.min(6, this.session.state.n_variables,
                          this.session.state.n_samples);
    const axes = this.view.axes.filter((a) => a <= rank);
    this.view = {...this.view, axes: axes.length >= 2 ? axes : [1, 2]};
    this.payload = await this.client.getBiplot(this.view.sessionId, this.view.axes);
    const exported = await this.client.getExport(this.view.sessionId) as
        {annotations?: FactorTable[]};
    this.factors = exported.annotations ?? [];
    this.view = reconcileSelections(this.view, this.payload);
    this.render();
  }

  private render(): void {
    if (!this.view || !this.payload) return;
    this.el.root.innerHTML =
        renderSynchronizedBiplots(this.view, this.payload, this.factors);
    this.el.root.querySelectorAll<SVGCircleElement>('.pt').forEach((node) => {
      node.addEventListener('click', () => {
        const id = node.getAttribute('data-id');
        if (id !== null) this.toggle(id, node.classList.contains('sample'));
      });
    });
    if (this.session) {
      this.el.log.textContent = this.session.steps
          .map((s) => `${s.index}: ${s.kind}`).join('\n');
    }
  }

  private toggle(id: string, isSample: boolean): void {
    if (!this.view) return;
    this.view = isSample ?
        {...this.view, selectedSamples: toggleSelection(this.view.selectedSamples, id)} :
        {...this.view, selectedVariables: toggleSelection(this.view.selectedVariables, id)};
    this.render();
  }

  /** Issue a steering action; selections survive a rejected step. */
  async act(action: SteerAction): Promise<void> {
    if (!this.view || this.busy) return;
    this.busy = true;
    this.el.status.textContent = 'waiting for server...';
    try {
      const request = steer(this.view, action);
      if (request.kind === 'undo') {
        await this.client.undo(this.view.sessionId);
      } else {
        await this.client.applyStep(this.view.sessionId, request.body);
      }
      await this.refresh();
      this.el.status.textContent = 'ok';
    } catch (err) {
      if (err instanceof GatewayError) {
        this.el.status.textContent = `rejected: ${err.message}`;
      } else {
        this.el.status.textContent = `error: ${String(err)}`;
      }
    } finally {
      this.busy = false;
    }
  }

  setColorBy(factor: string | null): void {
    if (!this.view) return;
    this.view = {...this.view, colorBy: factor};
    this.render();
  }

  setAxes(axes: number[]): void {
    if (!this.view) return;
    this.view = {...this.view, axes};
    void this.refresh();
  }

  setRotation(yaw: number, pitch: number): void {
    if (!this.view) return;
    this.view = {...this.view, rotation: {yaw, pitch}};
    this.render();
  }
}

/** Entry point used by index.html. */
export function mount(root: HTMLElement): BiplotApp {
  const base = (document.getElementById('gateway') as HTMLInputElement | null)
                   ?.value ?? 'http://127.0.0.1:8350';
  const els: AppElements = {
    root: root.querySelector('#panels') as HTMLElement,
    status: root.querySelector('#status') as HTMLElement,
    log: root.querySelector('#steplog') as HTMLElement,
  };
  return new BiplotApp(new GatewayClient(base), els);
}
