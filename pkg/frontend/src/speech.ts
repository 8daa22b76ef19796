/**
 * Push-to-talk speech capture on top of the browser's built-in
 * SpeechRecognition, where present. The transcript only ever fills the task
 * field for the operator to review and edit; nothing is auto-submitted.
 */

interface RecognitionLike {
  lang: string;
  interimResults: boolean;
  maxAlternatives: number;
  onresult: ((ev: any) => void) | null;
  onend: (() => void) | null;
  onerror: ((ev: any) => void) | null;
  start(): void;
  stop(): void;
}

export function getRecognitionCtor(w: any): (new () => RecognitionLike) | null {
  if (!w) return null;
  return w.SpeechRecognition || w.webkitSpeechRecognition || null;
}

export function speechAvailable(w: any): boolean {
  return getRecognitionCtor(w) !== null;
}

export interface PushToTalk {
  start(): void;
  stop(): void;
  readonly listening: boolean;
}

export interface PushToTalkOptions {
  lang?: string;
  /** receives the transcript; the caller puts it in the text field */
  onTranscript: (text: string) => void;
  onListening?: (listening: boolean) => void;
  onError?: (message: string) => void;
}

export function createPushToTalk(w: any, opts: PushToTalkOptions): PushToTalk | null {
  const Ctor = getRecognitionCtor(w);
  if (Ctor === null) return null;

  let listening = false;
  const recognition = new Ctor();
  recognition.lang = opts.lang ?? "en-US";
  recognition.interimResults = false;
  recognition.maxAlternatives = 1;

  recognition.onresult = (ev: any) => {
    const result = ev.results?.[ev.results.length - 1]?.[0];
    if (result && typeof result.transcript === "string") {
      opts.onTranscript(result.transcript.trim());
    }
  };
  recognition.onend = () => {
    listening = false;
    opts.onListening?.(false);
  };
  recognition.onerror = (ev: any) => {
    listening = false;
    opts.onListening?.(false);
    opts.onError?.(String(ev?.error ?? "speech error"));
  };

  return {
    start() {
      if (listening) return;
      listening = true;
      opts.onListening?.(true);
      recognition.start();
    },
    stop() {
      if (!listening) return;
      recognition.stop();
    },
    get listening() {
      return listening;
    },
  };
}
