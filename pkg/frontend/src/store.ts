/** Minimal observable value holder shared by the wizard views. */

export type Listener = () => void;

export class Store<T extends object> {
  private value: T;
  private readonly listeners = new Set<Listener>();

  constructor(initial: T) {
    this.value = initial;
  }

  get(): T {
    return this.value;
  }

  /** Merge a partial update and notify subscribers. */
  set(patch: Partial<T>): void {
    this.value = { ...this.value, ...patch };
    this.emit();
  }

  /** Swap the whole value, used when restarting a session. */
  replace(next: T): void {
    this.value = next;
    this.emit();
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => {
      this.listeners.delete(listener);
    };
  }

  private emit(): void {
    for (const listener of [...this.listeners]) {
      listener();
    }
  }
}
