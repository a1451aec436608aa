/** Thin fetch client for the episode wire service.
 *
 * Requests are strictly sequential per session: the client tracks the
 * action sequence number and refuses to overlap in-flight calls, so the
 * UI can never race itself.
 */

import type { WireAction, WireObservation, WireResult, WireTaskEntry } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parse(response: Response): Promise<any> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(response.status, body.code ?? "unknown", body.message ?? response.statusText);
  }
  return body;
}

export type StepPayload = { observation?: WireObservation; result?: WireResult };

export class SessionClient {
  private seq = 0;
  private inFlight = false;

  private constructor(
    readonly baseUrl: string,
    readonly sessionId: string,
  ) {}

  static async listTasks(baseUrl: string): Promise<WireTaskEntry[]> {
    const body = await parse(await fetch(`${baseUrl}/tasks`));
    return body.tasks;
  }

  static async create(baseUrl: string, taskId: string): Promise<{ client: SessionClient; observation: WireObservation }> {
    const body = await parse(
      await fetch(`${baseUrl}/sessions`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ task_id: taskId }),
      }),
    );
    return { client: new SessionClient(baseUrl, body.session_id), observation: body.observation };
  }

  private async exclusive<T>(work: () => Promise<T>): Promise<T> {
    if (this.inFlight) {
      throw new Error("a request is already in flight for this session");
    }
    this.inFlight = true;
    try {
      return await work();
    } finally {
      this.inFlight = false;
    }
  }

  async submit(action: WireAction): Promise<StepPayload> {
    return this.exclusive(async () => {
      const body = await parse(
        await fetch(`${this.baseUrl}/sessions/${this.sessionId}/action`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify({ seq: this.seq, action }),
        }),
      );
      this.seq += 1;
      return body;
    });
  }

  async observation(): Promise<WireObservation> {
    return this.exclusive(async () => {
      const body = await parse(await fetch(`${this.baseUrl}/sessions/${this.sessionId}/observation`));
      return body.observation;
    });
  }

  async result(): Promise<WireResult> {
    return this.exclusive(async () => {
      const body = await parse(await fetch(`${this.baseUrl}/sessions/${this.sessionId}/result`));
      return body.result;
    });
  }
}
