import { ApiError } from "./api.js";

/**
 * Run a mutation with one conflict retry.
 *
 * The attempt closure receives the generation to send.  When the service
 * answers E_CONFLICT the notebook changed under us: the caller's
 * onConflict hook fires (the UI shows a toast and refreshes its views),
 * a fresh generation is fetched, and the mutation runs once more.  A
 * second conflict propagates; at that point the user needs to see the
 * refreshed state before trying again.
 */
export async function withConflictRetry<T>(
  attempt: (generation: number) => Promise<T>,
  freshGeneration: () => Promise<number>,
  initialGeneration: number,
  onConflict?: (error: ApiError) => void | Promise<void>,
): Promise<T> {
  try {
    return await attempt(initialGeneration);
  } catch (error) {
    if (!(error instanceof ApiError) || error.code !== "E_CONFLICT") {
      throw error;
    }
    await onConflict?.(error);
    const generation = await freshGeneration();
    return attempt(generation);
  }
}
