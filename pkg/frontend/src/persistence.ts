/**
 * Draft persistence so a reload mid-session restores the answers.
 *
 * Only the inputs are saved. Results and feedback belong to the server and
 * are never written to local storage.
 */

import { DraftData, STEP_ORDER, SessionState, StepId } from './state.js';

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export const DRAFT_KEY = 'bronchial-dx.draft.v1';

interface StoredDraft extends DraftData {
  version: number;
}

export function saveDraft(storage: StorageLike, state: SessionState): void {
  const draft: StoredDraft = {
    version: 1,
    step: state.step === 'result' ? 'core' : state.step,
    answers: state.answers,
    professionalAnswers: state.professionalAnswers,
    includeProfessional: state.includeProfessional,
    report: state.report,
  };
  storage.setItem(DRAFT_KEY, JSON.stringify(draft));
}

function isAnswerMap(value: unknown): value is Record<string, boolean> {
  return (
    typeof value === 'object' &&
    value !== null &&
    !Array.isArray(value) &&
    Object.values(value).every((v) => typeof v === 'boolean')
  );
}

function isReportDraft(value: unknown): value is Record<string, string> {
  return (
    typeof value === 'object' &&
    value !== null &&
    !Array.isArray(value) &&
    Object.values(value).every((v) => typeof v === 'string')
  );
}

/** Load a saved draft, or null when absent, stale, or unreadable. */
export function loadDraft(storage: StorageLike): DraftData | null {
  const raw = storage.getItem(DRAFT_KEY);
  if (raw === null) {
    return null;
  }
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof parsed !== 'object' || parsed === null) {
    return null;
  }
  const draft = parsed as Partial<StoredDraft>;
  if (draft.version !== 1) {
    return null;
  }
  if (!isAnswerMap(draft.answers) || !isAnswerMap(draft.professionalAnswers)) {
    return null;
  }
  if (!isReportDraft(draft.report) || typeof draft.includeProfessional !== 'boolean') {
    return null;
  }
  const step: StepId = STEP_ORDER.includes(draft.step as StepId)
    ? (draft.step as StepId)
    : 'core';
  return {
    step: step === 'result' ? 'core' : step,
    answers: draft.answers,
    professionalAnswers: draft.professionalAnswers,
    includeProfessional: draft.includeProfessional,
    report: draft.report,
  };
}

export function clearDraft(storage: StorageLike): void {
  storage.removeItem(DRAFT_KEY);
}
