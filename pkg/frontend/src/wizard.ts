/**
 * DOM glue for the four-step wizard.
 *
 * The root element gets one delegated listener per event type, and every
 * store change re-renders the whole subtree from the pure renderers. All
 * decisions live in state.ts and actions.ts.
 */

import type { ApiClient, QuestionnaireDef } from './api.js';
import { submitCase, submitFeedback } from './actions.js';
import { renderApp } from './render.js';
import type { StorageLike } from './persistence.js';
import type { Store } from './store.js';
import {
  STEP_ORDER,
  SessionState,
  StepId,
  canLeave,
  canSubmit,
  initialState,
  setAnswer,
} from './state.js';

export interface WizardContext {
  client: ApiClient;
  store: Store<SessionState>;
  core: QuestionnaireDef;
  professional: QuestionnaireDef;
  storage: StorageLike;
}

function moveStep(state: SessionState, delta: number): StepId {
  const order = STEP_ORDER.filter((s) => s !== 'result');
  const index = order.indexOf(state.step as Exclude<StepId, 'result'>);
  const next = Math.min(Math.max(index + delta, 0), order.length - 1);
  return order[next];
}

function readImage(ctx: WizardContext, input: HTMLInputElement): void {
  const file = input.files?.[0];
  if (!file) {
    return;
  }
  const reader = new FileReader();
  reader.onload = () => {
    const url = String(reader.result ?? '');
    const comma = url.indexOf(',');
    ctx.store.set({
      imageName: file.name,
      imageBase64: comma >= 0 ? url.slice(comma + 1) : url,
    });
  };
  reader.readAsDataURL(file);
}

function handleChange(ctx: WizardContext, target: HTMLElement): void {
  const state = ctx.store.get();
  if (target instanceof HTMLInputElement && target.dataset.question !== undefined) {
    const id = target.dataset.question;
    const value = target.value === 'yes';
    if (target.dataset.kind === 'professional') {
      ctx.store.set({
        professionalAnswers: setAnswer(ctx.professional, state.professionalAnswers, id, value),
        fieldError: null,
      });
    } else {
      ctx.store.set({
        answers: setAnswer(ctx.core, state.answers, id, value),
        fieldError: null,
      });
    }
    return;
  }
  if (target instanceof HTMLInputElement && target.dataset.reportField !== undefined) {
    ctx.store.set({
      report: { ...state.report, [target.dataset.reportField]: target.value },
      fieldError: null,
    });
    return;
  }
  if (target instanceof HTMLInputElement && target.dataset.action === 'toggle-professional') {
    ctx.store.set({ includeProfessional: target.checked });
    return;
  }
  if (target instanceof HTMLInputElement && target.dataset.action === 'image') {
    readImage(ctx, target);
    return;
  }
  if (target instanceof HTMLInputElement && target.dataset.rating !== undefined) {
    ctx.store.set({ feedback: { ...state.feedback, rating: Number(target.dataset.rating) } });
    return;
  }
  if (target instanceof HTMLSelectElement && target.dataset.feedbackLabel !== undefined) {
    ctx.store.set({ feedback: { ...state.feedback, label: target.value } });
    return;
  }
  if (target instanceof HTMLTextAreaElement && target.dataset.feedbackComment !== undefined) {
    ctx.store.set({ feedback: { ...state.feedback, comment: target.value } });
  }
}

function handleClick(ctx: WizardContext, target: HTMLElement): void {
  const button = target.closest<HTMLElement>('[data-action]');
  if (button === null || (button instanceof HTMLButtonElement && button.disabled)) {
    return;
  }
  const state = ctx.store.get();
  switch (button.dataset.action) {
    case 'next':
      if (canLeave(state.step, ctx.core, ctx.professional, state)) {
        ctx.store.set({ step: moveStep(state, 1), fieldError: null });
      }
      return;
    case 'back':
      ctx.store.set({ step: moveStep(state, -1), fieldError: null });
      return;
    case 'submit':
      if (canSubmit(ctx.core, ctx.professional, state)) {
        void submitCase(ctx);
      }
      return;
    case 'send-feedback':
      void submitFeedback(ctx);
      return;
    case 'clear-image':
      ctx.store.set({ imageName: null, imageBase64: null });
      return;
    case 'restart':
      ctx.store.replace(initialState());
      return;
    default:
      return;
  }
}

/** Mount the wizard and return a teardown function. */
export function mountWizard(root: HTMLElement, ctx: WizardContext): () => void {
  const sync = () => {
    const state = ctx.store.get();
    root.innerHTML = renderApp(state, {
      core: ctx.core,
      professional: ctx.professional,
      canLeaveStep: canLeave(state.step, ctx.core, ctx.professional, state),
      canSubmitNow: canSubmit(ctx.core, ctx.professional, state),
    });
  };
  const onChange = (event: Event) => {
    if (event.target instanceof HTMLElement) {
      handleChange(ctx, event.target);
    }
  };
  const onClick = (event: Event) => {
    if (event.target instanceof HTMLElement) {
      handleClick(ctx, event.target);
    }
  };
  root.addEventListener('change', onChange);
  root.addEventListener('click', onClick);
  const unsubscribe = ctx.store.subscribe(sync);
  sync();
  return () => {
    unsubscribe();
    root.removeEventListener('change', onChange);
    root.removeEventListener('click', onClick);
  };
}
