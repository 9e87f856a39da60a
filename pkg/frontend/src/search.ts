/**
 * External search links for term surfaces (dictionary/web lookups while
 * validating candidates).  Provider URL templates live in a static
 * config file; `{query}` is replaced with the percent-encoded surface.
 */

import providers from "./providers.json";

export class UnknownProvider extends Error {
  constructor(provider: string) {
    super(`unknown search provider ${JSON.stringify(provider)}`);
    this.name = "UnknownProvider";
  }
}

export const PROVIDERS: Record<string, string> = providers;

export function externalSearchUrl(surface: string, provider: string): string {
  const template = PROVIDERS[provider];
  if (template === undefined) {
    throw new UnknownProvider(provider);
  }
  return template.replace("{query}", encodeURIComponent(surface));
}
