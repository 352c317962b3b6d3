/** Thin typed client over the darkroom HTTP API.
 *
 * The fetch implementation is injectable so tests (and non-browser hosts)
 * can supply their own transport.
 */

import type {
  ApiErrorBody,
  DatabaseIndex,
  ExecuteRequest,
  Registry,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ApiErrorBody,
  ) {
    super(body.message);
    this.name = "ApiError";
  }
}

async function raiseForStatus(res: Response): Promise<Response> {
  if (res.ok) return res;
  let body: ApiErrorBody;
  try {
    body = (await res.json()) as ApiErrorBody;
  } catch {
    body = { code: "http", message: res.statusText, details: {} };
  }
  throw new ApiError(res.status, body);
}

export class ApiClient {
  private registryEtag: string | null = null;
  private registryCache: Registry | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  /** Fetch the filter catalog, revalidating with If-None-Match. */
  async getFilters(): Promise<Registry> {
    const headers: Record<string, string> = {};
    if (this.registryEtag) headers["If-None-Match"] = this.registryEtag;
    const res = await this.fetchImpl(`${this.baseUrl}/api/filters`, {
      headers,
    });
    if (res.status === 304 && this.registryCache) return this.registryCache;
    await raiseForStatus(res);
    this.registryEtag = res.headers.get("etag");
    this.registryCache = (await res.json()) as Registry;
    return this.registryCache;
  }

  async getDatabases(): Promise<string[]> {
    const res = await raiseForStatus(
      await this.fetchImpl(`${this.baseUrl}/api/databases`),
    );
    return (await res.json()) as string[];
  }

  async getIndex(database: string): Promise<DatabaseIndex> {
    const res = await raiseForStatus(
      await this.fetchImpl(
        `${this.baseUrl}/api/databases/${encodeURIComponent(database)}/index`,
      ),
    );
    return (await res.json()) as DatabaseIndex;
  }

  /** Run a pipeline server-side; resolves to the encoded image bytes. */
  async execute(request: ExecuteRequest): Promise<Blob> {
    const res = await raiseForStatus(
      await this.fetchImpl(`${this.baseUrl}/api/execute`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(request),
      }),
    );
    return res.blob();
  }
}
