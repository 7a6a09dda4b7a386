/** Pure SVG renderer for the synchronized biplot panels.
 *
 * The scene is a deterministic function of (ViewState, BiplotPayload,
 * factor tables): samples on the left panel, variables on the right, both
 * over the same component axes. Selecting a point on one side highlights the
 * counterpart points with the largest server-provided pairing values; no
 * statistic is computed client-side.
 */

import {alpha2Line} from './format.js';
import {ViewState, validateAxes} from './state.js';
import {BiplotPayload, FactorTable} from './types.js';

const WIDTH = 980;
const HEIGHT = 600;
const PANEL = 420;
const PANEL_Y = 90;
const SAMPLE_PANEL_X = 40;
const VARIABLE_PANEL_X = 520;
const FILL = 0.9;

export const PALETTE = [
  '#4477aa', '#ee6677', '#228833', '#ccbb44', '#66ccee',
  '#aa3377', '#bbbbbb', '#222255', '#225555', '#555522',
];

type Point = {x: number; y: number};

function project(row: number[], axes: number[], payload: BiplotPayload,
                 view: ViewState): Point {
  const cols = axes.map((a) => payload.components.indexOf(a));
  const coord = (i: number) => {
    const value = row[cols[i]];
    return view.pointScale === 'unit' ? value / payload.weights[cols[i]] : value;
  };
  if (axes.length === 2) {
    return {x: coord(0), y: coord(1)};
  }
  const {yaw, pitch} = view.rotation;
  const x = coord(0);
  const y = coord(1);
  const z = coord(2);
  const x1 = Math.cos(yaw) * x + Math.sin(yaw) * z;
  const z1 = -Math.sin(yaw) * x + Math.cos(yaw) * z;
  const y1 = Math.cos(pitch) * y - Math.sin(pitch) * z1;
  return {x: x1, y: y1};
}

function fitToPanel(points: Point[], panelX: number): Point[] {
  let extent = 0;
  for (const p of points) {
    extent = Math.max(extent, Math.abs(p.x), Math.abs(p.y));
  }
  const scale = extent > 0 ? (PANEL / 2) * FILL / extent : 1;
  const cx = panelX + PANEL / 2;
  const cy = PANEL_Y + PANEL / 2;
  return points.map((p) => ({x: cx + p.x * scale, y: cy - p.y * scale}));
}

function fmt(value: number): string {
  return value.toFixed(2);
}

/** Counterpart indices with the largest pairing values for one selection. */
export function highlightedSamples(payload: BiplotPayload, variableId: string,
                                   count: number): string[] {
  if (!payload.pairings) return [];
  const j = payload.variable_ids.indexOf(variableId);
  if (j < 0) return [];
  const row = payload.pairings[j];
  const order = row.map((value, k) => ({value, k}))
                    .sort((a, b) => b.value - a.value || a.k - b.k)
                    .slice(0, count);
  return order.map((e) => payload.sample_ids[e.k]);
}

export function highlightedVariables(payload: BiplotPayload, sampleId: string,
                                     count: number): string[] {
  if (!payload.pairings) return [];
  const k = payload.sample_ids.indexOf(sampleId);
  if (k < 0) return [];
  const order = payload.pairings.map((row, j) => ({value: row[k], j}))
                    .sort((a, b) => b.value - a.value || a.j - b.j)
                    .slice(0, count);
  return order.map((e) => payload.variable_ids[e.j]);
}

function sampleColors(payload: BiplotPayload, view: ViewState,
                      factorTables: FactorTable[]): Map<string, string> {
  const colors = new Map<string, string>();
  if (!view.colorBy) return colors;
  for (const table of factorTables) {
    if (table.scope !== 'sample' || !(view.colorBy in table.factors)) continue;
    const labels = table.factors[view.colorBy];
    const levelColor = new Map<string, string>();
    for (const id of payload.sample_ids) {
      const label = labels[id];
      if (label === undefined) continue;
      if (!levelColor.has(label)) {
        levelColor.set(label, PALETTE[levelColor.size % PALETTE.length]);
      }
      colors.set(id, levelColor.get(label)!);
    }
  }
  return colors;
}

function legendEntries(payload: BiplotPayload, view: ViewState,
                       factorTables: FactorTable[]): [string, string][] {
  if (!view.colorBy) return [];
  const entries: [string, string][] = [];
  const seen = new Set<string>();
  for (const table of factorTables) {
    if (table.scope !== 'sample' || !(view.colorBy in table.factors)) continue;
    const labels = table.factors[view.colorBy];
    for (const id of payload.sample_ids) {
      const label = labels[id];
      if (label !== undefined && !seen.has(label)) {
        entries.push([label, PALETTE[seen.size % PALETTE.length]]);
        seen.add(label);
      }
    }
  }
  return entries;
}

function panelFrame(x: number, title: string, axes: number[],
                    threeD: boolean): string {
  const labelY = PANEL_Y + PANEL + 24;
  const axisText = threeD ?
      `components ${axes.join(', ')} (rotated projection)` :
      `component ${axes[0]} vs component ${axes[1]}`;
  return [
    `<rect class="frame" x="${x}" y="${PANEL_Y}" width="${PANEL}" ` +
        `height="${PANEL}" fill="none" stroke="#999"/>`,
    `<text class="panel-title" x="${x + PANEL / 2}" y="${PANEL_Y - 10}" ` +
        `text-anchor="middle">${title}</text>`,
    `<text class="axis-label" x="${x + PANEL / 2}" y="${labelY}" ` +
        `text-anchor="middle">${axisText}</text>`,
  ].join('\n');
}

function renderPoints(ids: string[], screen: Point[], kind: string,
                      selected: Set<string>, highlighted: Set<string>,
                      colors: Map<string, string>): string {
  const parts: string[] = [];
  ids.forEach((id, i) => {
    const cls = ['pt', kind];
    if (selected.has(id)) cls.push('selected');
    if (highlighted.has(id)) cls.push('highlight');
    const fill = colors.get(id) ?? (kind === 'sample' ? '#4477aa' : '#777777');
    const r = selected.has(id) ? 6 : highlighted.has(id) ? 5.5 : 4;
    parts.push(
        `<circle class="${cls.join(' ')}" data-id="${id}" ` +
        `cx="${fmt(screen[i].x)}" cy="${fmt(screen[i].y)}" r="${r}" ` +
        `fill="${fill}"${highlighted.has(id) ?
            ' stroke="#cc3311" stroke-width="2"' : ''}/>`);
  });
  return parts.join('\n');
}

/**
 * Render both panels as one SVG document string.
 *
 * Axes come from the view (2-D directly, 3-D through the view rotation);
 * the alpha2 readout line shows the payload numbers verbatim.
 */
export function renderSynchronizedBiplots(
    view: ViewState, payload: BiplotPayload,
    factorTables: FactorTable[] = []): string {
  validateAxes(view.axes, payload);
  const threeD = view.axes.length === 3;

  const samplePts = fitToPanel(
      payload.sample_coords.map((row) => project(row, view.axes, payload, view)),
      SAMPLE_PANEL_X);
  const variablePts = fitToPanel(
      payload.variable_coords.map((row) => project(row, view.axes, payload, view)),
      VARIABLE_PANEL_X);

  const highlightSamples = new Set<string>();
  for (const vid of view.selectedVariables) {
    for (const sid of highlightedSamples(payload, vid,
                                         view.controls.highlightCount)) {
      highlightSamples.add(sid);
    }
  }
  const highlightVariables = new Set<string>();
  for (const sid of view.selectedSamples) {
    for (const vid of highlightedVariables(payload, sid,
                                           view.controls.highlightCount)) {
      highlightVariables.add(vid);
    }
  }

  const colors = sampleColors(payload, view, factorTables);
  const legend = legendEntries(payload, view, factorTables)
                     .map(([label, color], i) =>
                              `<circle cx="${SAMPLE_PANEL_X + 12}" ` +
                              `cy="${PANEL_Y + PANEL + 48 + i * 18}" r="5" fill="${color}"/>` +
                              `<text class="legend" x="${SAMPLE_PANEL_X + 24}" ` +
                              `y="${PANEL_Y + PANEL + 52 + i * 18}">${label}</text>`)
                     .join('\n');

  const a = payload.alpha2;
  const readout = alpha2Line(a.observed, a.null_mean, a.null_sd, a.ratio);

  return [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<text class="alpha2" x="${WIDTH / 2}" y="28" text-anchor="middle">` +
        `${readout}</text>`,
    `<text class="meta" x="${WIDTH / 2}" y="50" text-anchor="middle">` +
        `null trials ${a.trials}, seed ${a.seed}, ` +
        `${a.standardized ? 'standardized' : 'raw'} null</text>`,
    panelFrame(SAMPLE_PANEL_X, 'samples', view.axes, threeD),
    renderPoints(payload.sample_ids, samplePts, 'sample',
                 new Set(view.selectedSamples), highlightSamples, colors),
    panelFrame(VARIABLE_PANEL_X, 'variables', view.axes, threeD),
    renderPoints(payload.variable_ids, variablePts, 'variable',
                 new Set(view.selectedVariables), highlightVariables,
                 new Map()),
    legend,
    '</svg>',
  ].join('\n');
}
