/** Boot: load the questionnaires, restore any draft, mount the wizard. */

import { ApiClient } from './api.js';
import { clearDraft, loadDraft, saveDraft } from './persistence.js';
import { Store } from './store.js';
import { SessionState, initialState } from './state.js';
import { mountWizard } from './wizard.js';

const root = document.getElementById('app');

async function boot(): Promise<void> {
  if (root === null) {
    return;
  }
  root.innerHTML = '<p class="hint">Loading questionnaires...</p>';
  const client = new ApiClient('');
  try {
    const [core, professional] = await Promise.all([
      client.questionnaire(),
      client.professionalQuestionnaire(),
    ]);
    const store = new Store<SessionState>(initialState(loadDraft(localStorage)));
    mountWizard(root, { client, store, core, professional, storage: localStorage });
    store.subscribe(() => {
      const state = store.get();
      if (state.step === 'result') {
        clearDraft(localStorage);
      } else {
        saveDraft(localStorage, state);
      }
    });
  } catch (err) {
    root.innerHTML = `
      <div class="banner error-banner">Could not load the questionnaires: ${String(err)}</div>
      <button type="button" id="retry">Retry</button>`;
    document.getElementById('retry')?.addEventListener('click', () => void boot());
  }
}

void boot();
