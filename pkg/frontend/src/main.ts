// DOM glue: renders FlowState into the page and forwards clicks to the
// state machine. All decisions live in flow.ts; keep this file dumb.

import { ApiClient } from './api.js'
import { AnnotationFlow, FlowState, LOCKOUT_EXPLANATION } from './flow.js'
import { renderQuestionnaire } from './questionnaire.js'

const root = document.getElementById('app') as HTMLElement

const params = new URLSearchParams(window.location.search)
const taskId = params.get('task') ?? 'task1'

const api = new ApiClient((input, init) => fetch(input, init))
const flow = new AnnotationFlow(api, taskId, render)

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag)
  node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

function renderLogin(): void {
  const box = el('div', 'panel login')
  box.appendChild(el('h1', 'title', 'Tweet emotion intensity annotation'))
  const label = el('label', 'field', 'Annotator id: ')
  const input = document.createElement('input')
  input.id = 'annotator-id'
  label.appendChild(input)
  box.appendChild(label)
  const button = el('button', 'primary', 'Start annotating') as HTMLButtonElement
  button.onclick = () => {
    if (input.value.trim()) void flow.start(input.value.trim())
  }
  box.appendChild(button)
  root.replaceChildren(box)
}

function renderAccuracy(state: FlowState, into: HTMLElement): void {
  if (state.accuracy !== null) {
    into.appendChild(
      el('p', 'accuracy', `Check-question accuracy so far: ${(state.accuracy * 100).toFixed(0)}%`),
    )
  }
}

function renderAnnotating(state: FlowState): void {
  const tuple = state.tuple
  if (!tuple) return
  const page = el('div', 'panel')
  const q = renderQuestionnaire(tuple.emotion)
  page.appendChild(el('h1', 'title', q.heading))
  page.appendChild(el('p', 'intro', q.intro))
  const notes = el('ul', 'notes')
  for (const note of q.notes) notes.appendChild(el('li', '', note))
  page.appendChild(notes)

  const cards = el('div', 'cards')
  tuple.items.forEach((item, i) => {
    const card = el('div', 'card')
    card.appendChild(el('h3', '', `Speaker ${i + 1}`))
    card.appendChild(el('p', 'tweet', item.text))
    const row = el('div', 'choices')
    const mostBtn = el('button', state.most === item.id ? 'chosen' : '', 'MOST') as HTMLButtonElement
    mostBtn.onclick = () => flow.selectMost(item.id)
    const leastBtn = el('button', state.least === item.id ? 'chosen' : '', 'LEAST') as HTMLButtonElement
    leastBtn.onclick = () => flow.selectLeast(item.id)
    row.append(mostBtn, leastBtn)
    card.appendChild(row)
    cards.appendChild(card)
  })
  page.appendChild(cards)
  page.appendChild(el('p', 'question', q.mostQuestion))
  page.appendChild(el('p', 'question', q.leastQuestion))

  if (state.inlineMessage) {
    page.appendChild(el('p', 'inline-error', state.inlineMessage))
  }
  const submit = el('button', 'primary', 'Submit judgment') as HTMLButtonElement
  submit.disabled = !flow.canSubmit
  submit.onclick = () => void flow.submit()
  page.appendChild(submit)
  renderAccuracy(state, page)
  root.replaceChildren(page)
}

function renderFeedback(state: FlowState): void {
  const page = el('div', 'panel')
  page.appendChild(el('h1', 'title', 'Response recorded'))
  if (state.feedback) {
    const cls = state.feedback.correct ? 'gold-right' : 'gold-wrong'
    page.appendChild(el('p', `banner ${cls}`, state.feedback.message))
  }
  renderAccuracy(state, page)
  const next = el('button', 'primary', 'Next tuple') as HTMLButtonElement
  next.onclick = () => void flow.continueNext()
  page.appendChild(next)
  root.replaceChildren(page)
}

function renderLocked(state: FlowState): void {
  const page = el('div', 'panel locked')
  page.appendChild(el('h1', 'title', 'Annotation closed'))
  if (state.feedback && !state.feedback.correct) {
    page.appendChild(el('p', 'banner gold-wrong', state.feedback.message))
  }
  page.appendChild(el('p', '', LOCKOUT_EXPLANATION))
  renderAccuracy(state, page)
  root.replaceChildren(page)
}

function renderDone(state: FlowState): void {
  const page = el('div', 'panel')
  page.appendChild(el('h1', 'title', 'All done'))
  page.appendChild(
    el('p', '', `No tuples remain for you. You contributed ${state.contributed} judgments.`),
  )
  root.replaceChildren(page)
}

function renderError(state: FlowState): void {
  const page = el('div', 'panel')
  page.appendChild(el('h1', 'title', 'Connection trouble'))
  page.appendChild(el('p', 'inline-error', state.errorMessage ?? 'request failed'))
  page.appendChild(el('p', '', 'Nothing was lost; your current selection is kept.'))
  const retry = el('button', 'primary', 'Retry') as HTMLButtonElement
  retry.onclick = () => void flow.retry()
  page.appendChild(retry)
  root.replaceChildren(page)
}

function render(state: FlowState): void {
  switch (state.phase) {
    case 'login':
      renderLogin()
      break
    case 'loading':
    case 'submitting':
      root.replaceChildren(el('div', 'panel', 'Working...'))
      break
    case 'annotating':
      renderAnnotating(state)
      break
    case 'feedback':
      renderFeedback(state)
      break
    case 'locked':
      renderLocked(state)
      break
    case 'done':
      renderDone(state)
      break
    case 'error':
      renderError(state)
      break
  }
}

renderLogin()
