/** Verbatim display of server-computed statistics.
 *
 * Nothing is recomputed or reformatted client-side: the string shown for a
 * payload number is exactly its JSON rendering, so golden tests can compare
 * displayed text byte-for-byte with the payload field.
 */

export function stat(value: number | boolean | string): string {
  return JSON.stringify(value);
}

export function alpha2Line(observed: number, nullMean: number, nullSd: number,
                           ratio: number): string {
  return (
    `alpha2 ${stat(observed)} | null ${stat(nullMean)} +/- ${stat(nullSd)}` +
    ` | ratio ${stat(ratio)}`
  );
}
