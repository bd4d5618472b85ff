/**
 * HTML renderers for every view in the wizard.
 *
 * Each function maps state to a markup string and nothing else, which keeps
 * the contract tests free of browser plumbing. Probabilities are printed
 * with String() on the exact value the server returned, the UI never
 * rounds, rescales, or recomputes them.
 */

import type { DiagnoseResult, QuestionnaireDef } from './api.js';
import {
  Answers,
  FeedbackState,
  FieldError,
  REPORT_FIELDS,
  ReportDraft,
  SessionState,
  answeredCount,
  lockState,
  questionIds,
} from './state.js';

const HTML_ESCAPES: Record<string, string> = {
  '&': '&amp;',
  '<': '&lt;',
  '>': '&gt;',
  '"': '&quot;',
  "'": '&#39;',
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => HTML_ESCAPES[ch]);
}

/** Turn a disease or field id into a readable label. */
export function labelFor(id: string): string {
  return id.replace(/_/g, ' ');
}

export function renderProgress(answered: number, total: number): string {
  return `<p class="progress" data-answered="${answered}" data-total="${total}">${answered} of ${total} answered</p>`;
}

function renderQuestionRow(
  kind: 'core' | 'professional',
  def: QuestionnaireDef,
  answers: Answers,
  id: string,
  text: string,
  parent: string | null,
  fieldError: FieldError | null,
): string {
  const lock = lockState(def, answers, id);
  const disabled = lock === 'open' ? '' : ' disabled';
  const yesChecked = lock === 'open' && answers[id] === true ? ' checked' : '';
  const noChecked =
    lock === 'forced-no' || (lock === 'open' && answers[id] === false) ? ' checked' : '';
  const note =
    lock === 'forced-no'
      ? `<span class="gate-note">locked to no by ${escapeHtml(parent ?? '')}</span>`
      : lock === 'pending'
        ? `<span class="gate-note">answer ${escapeHtml(parent ?? '')} first</span>`
        : '';
  const error =
    fieldError !== null && fieldError.field === id
      ? `<p class="field-error">${escapeHtml(fieldError.message)}</p>`
      : '';
  const sub = parent !== null ? ' question-sub' : '';
  return `
    <li class="question${sub}" data-question-row="${escapeHtml(id)}">
      <span class="question-text">${escapeHtml(text)}</span>
      <span class="question-answers">
        <label><input type="radio" name="q-${escapeHtml(id)}" value="yes" data-question="${escapeHtml(id)}" data-kind="${kind}"${yesChecked}${disabled}> Yes</label>
        <label><input type="radio" name="q-${escapeHtml(id)}" value="no" data-question="${escapeHtml(id)}" data-kind="${kind}"${noChecked}${disabled}> No</label>
      </span>
      ${note}${error}
    </li>`;
}

export function renderQuestionnaire(
  kind: 'core' | 'professional',
  def: QuestionnaireDef,
  answers: Answers,
  fieldError: FieldError | null,
): string {
  const rows: string[] = [];
  for (const group of def.groups) {
    for (const q of group.questions) {
      rows.push(renderQuestionRow(kind, def, answers, q.id, q.text, q.parent ?? null, fieldError));
    }
  }
  return `<ol class="question-list">${rows.join('')}</ol>`;
}

export function renderReportForm(
  draft: ReportDraft,
  fieldError: FieldError | null,
  imageName: string | null,
): string {
  const rows = REPORT_FIELDS.map((field) => {
    const value = draft[field.id] ?? '';
    const error =
      fieldError !== null && fieldError.field === field.id
        ? `<p class="field-error">${escapeHtml(fieldError.message)}</p>`
        : '';
    return `
      <label class="report-row" data-report-row="${field.id}">
        <span>${escapeHtml(field.label)} (${escapeHtml(field.unit)})</span>
        <input type="text" inputmode="decimal" data-report-field="${field.id}" value="${escapeHtml(value)}">
        ${error}
      </label>`;
  });
  const imageError =
    fieldError !== null && fieldError.field === 'image'
      ? `<p class="field-error">${escapeHtml(fieldError.message)}</p>`
      : '';
  const imageNote =
    imageName !== null
      ? `<span class="image-note">attached: ${escapeHtml(imageName)}</span>
         <button type="button" data-action="clear-image">Remove</button>`
      : '<span class="image-note">no image attached</span>';
  return `
    <div class="report-form">
      <p class="hint">All fields are optional. Leave anything you do not have blank.</p>
      ${rows.join('')}
      <div class="image-attach">
        <label>CT section image
          <input type="file" accept="image/*" data-action="image">
        </label>
        ${imageNote}
        ${imageError}
      </div>
    </div>`;
}

/**
 * Probability list sorted by value, largest first.
 *
 * The visible number is String(value) on the server's figure. Bar widths
 * are presentation only and scale against the largest entry.
 */
export function renderProbabilityBars(probabilities: Record<string, number>): string {
  const entries = Object.entries(probabilities).sort(
    (a, b) => b[1] - a[1] || a[0].localeCompare(b[0]),
  );
  const widest = entries.length > 0 ? entries[0][1] : 0;
  const rows = entries.map(([name, value]) => {
    const width = widest > 0 ? Math.round((value / widest) * 100) : 0;
    return `
      <div class="prob-row" data-disease="${escapeHtml(name)}">
        <span class="prob-label">${escapeHtml(labelFor(name))}</span>
        <span class="prob-track"><span class="prob-fill" style="width: ${width}%"></span></span>
        <span class="prob-value">${String(value)}</span>
      </div>`;
  });
  return `<div class="prob-bars">${rows.join('')}</div>`;
}

export function renderVerdict(result: DiagnoseResult): string {
  let headline: string;
  if (result.verdict === 'positive') {
    headline = `Indicators point to ${escapeHtml(labelFor(result.top ?? ''))}`;
  } else if (result.verdict === 'negative') {
    headline = 'No positive indication';
  } else {
    headline = 'Inconclusive, more information is needed';
  }
  const signs =
    result.signs.length > 0
      ? `<p class="signs">Signs extracted: ${result.signs.map(escapeHtml).join(', ')}</p>`
      : '<p class="signs">No signs were extracted from the inputs.</p>';
  return `
    <div class="verdict verdict-${result.verdict}">
      <h2>${headline}</h2>
      <p class="case-meta">Case ${escapeHtml(result.case_id)}, model version ${result.model_version}, algorithm ${escapeHtml(result.algorithm)}</p>
      ${signs}
    </div>`;
}

export function renderFeedbackPanel(feedback: FeedbackState, diseases: string[]): string {
  if (feedback.phase === 'sent') {
    const learned = feedback.learned
      ? ` The confirmed label was added to the model, now at version ${feedback.modelVersion}.`
      : '';
    return `
      <div class="feedback feedback-sent">
        <p>Thank you, your feedback was recorded.${learned}</p>
      </div>`;
  }
  if (feedback.phase === 'conflict') {
    return `
      <div class="feedback feedback-conflict">
        <p class="feedback-message">This case already has feedback, so this rating was not stored.</p>
        <p class="feedback-detail">${escapeHtml(feedback.message ?? '')}</p>
      </div>`;
  }
  const ratings = [1, 2, 3, 4, 5]
    .map(
      (n) =>
        `<label><input type="radio" name="rating" value="${n}" data-rating="${n}"${
          feedback.rating === n ? ' checked' : ''
        }> ${n}</label>`,
    )
    .join('');
  const options = ['', ...diseases]
    .map((d) => {
      const label = d === '' ? 'not confirmed' : labelFor(d);
      const selected = feedback.label === d ? ' selected' : '';
      return `<option value="${escapeHtml(d)}"${selected}>${escapeHtml(label)}</option>`;
    })
    .join('');
  const error =
    feedback.phase === 'error'
      ? `<p class="feedback-message">${escapeHtml(feedback.message ?? 'sending failed')}</p>`
      : '';
  const disabled = feedback.rating === null || feedback.phase === 'sending' ? ' disabled' : '';
  return `
    <div class="feedback">
      <h3>How useful was this result?</h3>
      <div class="rating">${ratings}</div>
      <label class="confirmed">Confirmed diagnosis, if one was made
        <select data-feedback-label>${options}</select>
      </label>
      <label class="comment">Comment
        <textarea data-feedback-comment rows="2">${escapeHtml(feedback.comment)}</textarea>
      </label>
      ${error}
      <button type="button" data-action="send-feedback"${disabled}>Send feedback</button>
    </div>`;
}

function renderStepNav(state: SessionState, nextEnabled: boolean, submitEnabled: boolean): string {
  const index = ['core', 'professional', 'findings'].indexOf(state.step);
  const back = index > 0 ? '<button type="button" data-action="back">Back</button>' : '';
  if (state.step === 'findings') {
    const disabled = submitEnabled ? '' : ' disabled';
    const label = state.sending ? 'Sending...' : 'Get result';
    return `<div class="nav">${back}<button type="button" data-action="submit"${disabled}>${label}</button></div>`;
  }
  const disabled = nextEnabled ? '' : ' disabled';
  return `<div class="nav">${back}<button type="button" data-action="next"${disabled}>Next</button></div>`;
}

export interface ViewDeps {
  core: QuestionnaireDef;
  professional: QuestionnaireDef;
  canLeaveStep: boolean;
  canSubmitNow: boolean;
}

export function renderApp(state: SessionState, deps: ViewDeps): string {
  const stepIndex = ['core', 'professional', 'findings', 'result'].indexOf(state.step) + 1;
  const banner =
    state.error !== null ? `<div class="banner error-banner">${escapeHtml(state.error)}</div>` : '';
  let body = '';
  if (state.step === 'core') {
    body = `
      <h2>Symptom questions</h2>
      ${renderProgress(answeredCount(deps.core, state.answers), questionIds(deps.core).length)}
      ${renderQuestionnaire('core', deps.core, state.answers, state.fieldError)}
      ${renderStepNav(state, deps.canLeaveStep, deps.canSubmitNow)}`;
  } else if (state.step === 'professional') {
    const checked = state.includeProfessional ? ' checked' : '';
    const section = state.includeProfessional
      ? `${renderProgress(
          answeredCount(deps.professional, state.professionalAnswers),
          questionIds(deps.professional).length,
        )}${renderQuestionnaire(
          'professional',
          deps.professional,
          state.professionalAnswers,
          state.fieldError,
        )}`
      : '<p class="hint">Skip this step if no clinician input is available.</p>';
    body = `
      <h2>Clinician questions</h2>
      <label class="include-toggle">
        <input type="checkbox" data-action="toggle-professional"${checked}>
        A clinician helped answer these questions
      </label>
      ${section}
      ${renderStepNav(state, deps.canLeaveStep, deps.canSubmitNow)}`;
  } else if (state.step === 'findings') {
    body = `
      <h2>Lab report and imaging</h2>
      ${renderReportForm(state.report, state.fieldError, state.imageName)}
      ${renderStepNav(state, deps.canLeaveStep, deps.canSubmitNow)}`;
  } else if (state.result !== null) {
    body = `
      ${renderVerdict(state.result)}
      <h3>Probabilities reported by the server</h3>
      ${renderProbabilityBars(state.result.probabilities)}
      ${renderFeedbackPanel(state.feedback, Object.keys(state.result.probabilities).sort())}
      <div class="nav"><button type="button" data-action="restart">Start a new session</button></div>`;
  }
  return `
    <div class="wizard" data-step="${state.step}">
      <p class="step-indicator">Step ${stepIndex} of 4</p>
      ${banner}
      ${body}
    </div>`;
}
