/**
 * Async actions that talk to the service and fold results into the store.
 *
 * Kept separate from the DOM glue so the round-trip behaviour, including
 * the duplicate-feedback conflict, is testable with a stubbed client.
 */

import { ApiClient, ApiError } from './api.js';
import type { Store } from './store.js';
import type { QuestionnaireDef } from './api.js';
import {
  SessionState,
  buildPayload,
  freshFeedback,
  stepForField,
} from './state.js';

export interface ActionContext {
  client: ApiClient;
  store: Store<SessionState>;
  core: QuestionnaireDef;
  professional: QuestionnaireDef;
}

export async function submitCase(ctx: ActionContext): Promise<void> {
  const state = ctx.store.get();
  const built = buildPayload(ctx.core, ctx.professional, state);
  if (built.payload === null) {
    ctx.store.set({
      fieldError: { field: built.invalidField ?? '', message: 'enter a number or leave blank' },
      error: null,
    });
    return;
  }
  ctx.store.set({ sending: true, error: null, fieldError: null });
  try {
    const result = await ctx.client.diagnose(built.payload);
    ctx.store.set({
      sending: false,
      result,
      step: 'result',
      feedback: freshFeedback(),
    });
  } catch (err) {
    if (err instanceof ApiError && err.field !== null) {
      ctx.store.set({
        sending: false,
        fieldError: { field: err.field, message: err.message },
        step: stepForField(err.field, ctx.core, ctx.professional),
      });
    } else if (err instanceof ApiError) {
      ctx.store.set({ sending: false, error: err.message });
    } else {
      ctx.store.set({ sending: false, error: `could not reach the service: ${String(err)}` });
    }
  }
}

export async function submitFeedback(ctx: ActionContext): Promise<void> {
  const state = ctx.store.get();
  if (state.result === null || state.feedback.rating === null) {
    return;
  }
  if (state.feedback.phase === 'sent' || state.feedback.phase === 'sending') {
    return;
  }
  ctx.store.set({ feedback: { ...state.feedback, phase: 'sending', message: null } });
  try {
    const outcome = await ctx.client.feedback(state.result.case_id, {
      rating: state.feedback.rating,
      ...(state.feedback.label !== '' ? { confirmed_label: state.feedback.label } : {}),
      ...(state.feedback.comment !== '' ? { comment: state.feedback.comment } : {}),
    });
    ctx.store.set({
      feedback: {
        ...ctx.store.get().feedback,
        phase: 'sent',
        message: null,
        learned: outcome.learned,
        modelVersion: outcome.model_version,
      },
    });
  } catch (err) {
    const feedback = ctx.store.get().feedback;
    if (err instanceof ApiError && err.status === 409) {
      ctx.store.set({ feedback: { ...feedback, phase: 'conflict', message: err.message } });
    } else if (err instanceof ApiError) {
      ctx.store.set({ feedback: { ...feedback, phase: 'error', message: err.message } });
    } else {
      ctx.store.set({
        feedback: { ...feedback, phase: 'error', message: `sending failed: ${String(err)}` },
      });
    }
  }
}
