/** Portal session state.
 *
 * Logged-in users keep saved items and search history in the profile
 * server, so they survive reloads and follow the user across machines.
 * Anonymous sessions keep the same state in local storage only.
 */

import { ApiClient } from "./api.js";
import { SessionInfo } from "./types.js";

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export class MemoryStorage implements KeyValueStore {
  private data = new Map<string, string>();
  getItem(key: string): string | null {
    return this.data.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }
}

const LOCAL_KEYS = { saved: "portal.saved_items", history: "portal.search_history" };
const HISTORY_LIMIT = 25;

export class PortalSession {
  info: SessionInfo | null = null;
  displayName = "";

  constructor(
    private api: ApiClient,
    private local: KeyValueStore = new MemoryStorage(),
  ) {}

  get token(): string {
    return this.info?.token ?? "";
  }

  get loggedIn(): boolean {
    return this.info !== null && this.info.kind === "login";
  }

  get categories(): string[] {
    return this.info?.categories ?? [];
  }

  async start(): Promise<void> {
    if (!this.info) {
      this.info = await this.api.anonymous();
    }
  }

  async login(username: string, secret: string): Promise<void> {
    this.info = await this.api.login(username, secret);
    this.displayName = username;
  }

  // -- saved items ------------------------------------------------------

  private readLocal(key: string): string[] {
    const raw = this.local.getItem(key);
    return raw ? (JSON.parse(raw) as string[]) : [];
  }

  async savedItems(): Promise<string[]> {
    if (this.loggedIn) {
      const got = await this.api.profileGet(this.token, "saved_items");
      return (got.value as string[] | null) ?? [];
    }
    return this.readLocal(LOCAL_KEYS.saved);
  }

  async saveItem(handle: string): Promise<string[]> {
    const current = await this.savedItems();
    if (!current.includes(handle)) {
      current.push(handle);
    }
    if (this.loggedIn) {
      await this.api.profilePut(this.token, "saved_items", current);
    } else {
      this.local.setItem(LOCAL_KEYS.saved, JSON.stringify(current));
    }
    return current;
  }

  async removeItem(handle: string): Promise<string[]> {
    const current = (await this.savedItems()).filter((h) => h !== handle);
    if (this.loggedIn) {
      await this.api.profilePut(this.token, "saved_items", current);
    } else {
      this.local.setItem(LOCAL_KEYS.saved, JSON.stringify(current));
    }
    return current;
  }

  // -- search history -----------------------------------------------------

  async searchHistory(): Promise<string[]> {
    if (this.loggedIn) {
      const got = await this.api.profileGet(this.token, "search_history");
      return (got.value as string[] | null) ?? [];
    }
    return this.readLocal(LOCAL_KEYS.history);
  }

  async recordSearch(expression: string): Promise<void> {
    const history = await this.searchHistory();
    history.unshift(expression);
    const trimmed = history.slice(0, HISTORY_LIMIT);
    if (this.loggedIn) {
      await this.api.profilePut(this.token, "search_history", trimmed);
    } else {
      this.local.setItem(LOCAL_KEYS.history, JSON.stringify(trimmed));
    }
  }
}
