/** The only configuration the UI takes: where the service lives. */

export interface Config {
  baseUrl: string;
}

declare global {
  interface Window {
    IWEK_BASE_URL?: string;
  }
}

export function resolveConfig(): Config {
  const fromPage =
    typeof window !== "undefined" ? window.IWEK_BASE_URL : undefined;
  return { baseUrl: fromPage ?? "http://127.0.0.1:8000" };
}
