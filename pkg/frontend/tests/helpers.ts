import type { ApiRequest, ApiResponse, Transport } from "../src/api.js";

export type Route = (req: ApiRequest) => ApiResponse | undefined;

/** Transport replaying recorded exchanges; logs every request it serves. */
export class RecordingTransport {
  readonly calls: ApiRequest[] = [];

  constructor(private readonly routes: Route[]) {}

  get transport(): Transport {
    return async (req) => {
      this.calls.push(req);
      for (const route of this.routes) {
        const resp = route(req);
        if (resp !== undefined) {
          return resp;
        }
      }
      throw new Error(`unexpected request: ${req.method} ${req.path}`);
    };
  }

  commits(): ApiRequest[] {
    return this.calls.filter(
      (c) => c.method === "POST" && c.path.endsWith("/commit"),
    );
  }
}

export function ok(json: unknown): ApiResponse {
  return { status: 200, json };
}
