/** Privacy mode: salted SHA-256 of URLs, rendered as an opaque URL form.
 *
 * The `urlhash://` scheme keeps hashed identifiers syntactically
 * URL-shaped so downstream tooling that normalizes URLs still accepts
 * them, while guaranteeing no plaintext leaves the browser.
 */

export function randomSalt(bytes = 16): string {
  const buf = new Uint8Array(bytes);
  crypto.getRandomValues(buf);
  return hex(buf);
}

export async function hashUrl(url: string, salt: string): Promise<string> {
  const data = new TextEncoder().encode(`${salt}:${url}`);
  const digest = await crypto.subtle.digest("SHA-256", data);
  return `urlhash://${hex(new Uint8Array(digest))}`;
}

function hex(buf: Uint8Array): string {
  return Array.from(buf, (b) => b.toString(16).padStart(2, "0")).join("");
}
