/**
 * Session state and the pure wizard rules.
 *
 * Everything here is plain data in, plain data out, so the completion and
 * gating behaviour can be tested without a DOM. Follow-up questions gate on
 * their parent: a parent answered no locks its children to no, while an
 * unanswered parent leaves them pending and therefore unanswered.
 */

import type { DiagnosePayload, DiagnoseResult, QuestionnaireDef } from './api.js';

export type StepId = 'core' | 'professional' | 'findings' | 'result';

export const STEP_ORDER: readonly StepId[] = ['core', 'professional', 'findings', 'result'];

export type Answers = Record<string, boolean>;

/** Raw text typed into the lab report inputs, keyed by field id. */
export type ReportDraft = Record<string, string>;

export interface ReportFieldDef {
  id: string;
  label: string;
  unit: string;
}

export const REPORT_FIELDS: readonly ReportFieldDef[] = [
  { id: 'fvc_l', label: 'Forced vital capacity', unit: 'L' },
  { id: 'fev1_l', label: 'Forced expiratory volume in 1 s', unit: 'L' },
  { id: 'fef_l_s', label: 'Forced expiratory flow', unit: 'L/s' },
  { id: 'fif_l_s', label: 'Forced inspiratory flow', unit: 'L/s' },
  { id: 'mvv_l_min', label: 'Maximal voluntary ventilation', unit: 'L/min' },
  { id: 'lung_volume_l', label: 'Lung volume', unit: 'L' },
  { id: 'airway_resistance_kpa_s_l', label: 'Airway resistance', unit: 'kPa s/L' },
  { id: 'ios_resistance_kpa_s_l', label: 'Oscillometry resistance', unit: 'kPa s/L' },
  { id: 'ios_reactance_kpa_s_l', label: 'Oscillometry reactance', unit: 'kPa s/L' },
];

export interface FieldError {
  field: string;
  message: string;
}

export type FeedbackPhase = 'idle' | 'sending' | 'sent' | 'conflict' | 'error';

export interface FeedbackState {
  phase: FeedbackPhase;
  rating: number | null;
  label: string;
  comment: string;
  message: string | null;
  learned: boolean;
  modelVersion: number | null;
}

export interface SessionState {
  step: StepId;
  answers: Answers;
  professionalAnswers: Answers;
  includeProfessional: boolean;
  report: ReportDraft;
  imageName: string | null;
  imageBase64: string | null;
  sending: boolean;
  result: DiagnoseResult | null;
  fieldError: FieldError | null;
  error: string | null;
  feedback: FeedbackState;
}

export function freshFeedback(): FeedbackState {
  return {
    phase: 'idle',
    rating: null,
    label: '',
    comment: '',
    message: null,
    learned: false,
    modelVersion: null,
  };
}

export interface DraftData {
  step: StepId;
  answers: Answers;
  professionalAnswers: Answers;
  includeProfessional: boolean;
  report: ReportDraft;
}

export function initialState(draft: DraftData | null = null): SessionState {
  return {
    step: draft?.step ?? 'core',
    answers: draft?.answers ?? {},
    professionalAnswers: draft?.professionalAnswers ?? {},
    includeProfessional: draft?.includeProfessional ?? false,
    report: draft?.report ?? {},
    imageName: null,
    imageBase64: null,
    sending: false,
    result: null,
    fieldError: null,
    error: null,
    feedback: freshFeedback(),
  };
}

export function questionIds(def: QuestionnaireDef): string[] {
  return def.groups.flatMap((group) => group.questions.map((q) => q.id));
}

export function hasQuestion(def: QuestionnaireDef, id: string): boolean {
  return def.groups.some((group) => group.questions.some((q) => q.id === id));
}

function parentOf(def: QuestionnaireDef, id: string): string | null {
  for (const group of def.groups) {
    for (const q of group.questions) {
      if (q.id === id) {
        return q.parent ?? null;
      }
    }
  }
  return null;
}

export type LockState = 'open' | 'forced-no' | 'pending';

/**
 * How a question may be edited given the current answers.
 *
 * Any ancestor answered no forces the question to no. Otherwise an
 * unanswered ancestor leaves it pending. Questions without parents are
 * always open.
 */
export function lockState(def: QuestionnaireDef, answers: Answers, id: string): LockState {
  let sawPending = false;
  let cursor = parentOf(def, id);
  while (cursor !== null) {
    const answer = answers[cursor];
    if (answer === false) {
      return 'forced-no';
    }
    if (answer === undefined) {
      sawPending = true;
    }
    cursor = parentOf(def, cursor);
  }
  return sawPending ? 'pending' : 'open';
}

/** The answer the server will see, or undefined while still unanswered. */
export function effectiveAnswer(
  def: QuestionnaireDef,
  answers: Answers,
  id: string,
): boolean | undefined {
  const lock = lockState(def, answers, id);
  if (lock === 'forced-no') {
    return false;
  }
  if (lock === 'pending') {
    return undefined;
  }
  return answers[id];
}

export function answeredCount(def: QuestionnaireDef, answers: Answers): number {
  return questionIds(def).filter((id) => effectiveAnswer(def, answers, id) !== undefined).length;
}

export function isComplete(def: QuestionnaireDef, answers: Answers): boolean {
  return answeredCount(def, answers) === questionIds(def).length;
}

/**
 * Record an answer, returning a new map.
 *
 * Answering no drops any stored answers of descendant questions because
 * they are locked to no from that point on.
 */
export function setAnswer(
  def: QuestionnaireDef,
  answers: Answers,
  id: string,
  value: boolean,
): Answers {
  const next: Answers = { ...answers, [id]: value };
  if (!value) {
    for (const candidate of questionIds(def)) {
      let cursor = parentOf(def, candidate);
      while (cursor !== null) {
        if (cursor === id) {
          delete next[candidate];
          break;
        }
        cursor = parentOf(def, cursor);
      }
    }
  }
  return next;
}

export interface ParsedReport {
  report: Record<string, number>;
  invalidField: string | null;
}

/** Parse the report inputs, flagging the first field that is not numeric. */
export function parseReport(draft: ReportDraft): ParsedReport {
  const report: Record<string, number> = {};
  for (const field of REPORT_FIELDS) {
    const raw = (draft[field.id] ?? '').trim();
    if (raw === '') {
      continue;
    }
    const value = Number(raw);
    if (!Number.isFinite(value)) {
      return { report: {}, invalidField: field.id };
    }
    report[field.id] = value;
  }
  return { report, invalidField: null };
}

export interface BuiltPayload {
  payload: DiagnosePayload | null;
  invalidField: string | null;
}

/**
 * Assemble the diagnose request from the session.
 *
 * Every questionnaire answer is sent explicitly so the server applies the
 * same gating the UI showed. Optional sections are omitted when empty.
 */
export function buildPayload(
  core: QuestionnaireDef,
  professional: QuestionnaireDef,
  state: SessionState,
): BuiltPayload {
  const parsed = parseReport(state.report);
  if (parsed.invalidField !== null) {
    return { payload: null, invalidField: parsed.invalidField };
  }
  const responses: Record<string, boolean> = {};
  for (const id of questionIds(core)) {
    responses[id] = effectiveAnswer(core, state.answers, id) ?? false;
  }
  const payload: DiagnosePayload = { responses };
  if (state.includeProfessional) {
    const professionalResponses: Record<string, boolean> = {};
    for (const id of questionIds(professional)) {
      professionalResponses[id] = effectiveAnswer(professional, state.professionalAnswers, id) ?? false;
    }
    payload.professional_responses = professionalResponses;
  }
  if (Object.keys(parsed.report).length > 0) {
    payload.report = parsed.report;
  }
  if (state.imageBase64 !== null) {
    payload.image = state.imageBase64;
  }
  return { payload, invalidField: null };
}

/** Which wizard step shows the field a server error points at. */
export function stepForField(
  field: string,
  core: QuestionnaireDef,
  professional: QuestionnaireDef,
): StepId {
  if (hasQuestion(core, field)) {
    return 'core';
  }
  if (hasQuestion(professional, field)) {
    return 'professional';
  }
  return 'findings';
}

/** True when the session has everything the submit button needs. */
export function canSubmit(
  core: QuestionnaireDef,
  professional: QuestionnaireDef,
  state: SessionState,
): boolean {
  if (state.sending) {
    return false;
  }
  if (!isComplete(core, state.answers)) {
    return false;
  }
  if (state.includeProfessional && !isComplete(professional, state.professionalAnswers)) {
    return false;
  }
  return parseReport(state.report).invalidField === null;
}

/** True when the step's own inputs allow moving forward. */
export function canLeave(
  step: StepId,
  core: QuestionnaireDef,
  professional: QuestionnaireDef,
  state: SessionState,
): boolean {
  if (step === 'core') {
    return isComplete(core, state.answers);
  }
  if (step === 'professional') {
    return !state.includeProfessional || isComplete(professional, state.professionalAnswers);
  }
  return true;
}
