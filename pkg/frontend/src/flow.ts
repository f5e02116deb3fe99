// The annotation session state machine, kept free of DOM concerns so the
// whole annotate -> feedback -> lockout loop is unit-testable against a
// stubbed service.
//
//   login -> loading -> annotating -> submitting -> feedback -> loading ...
//                                   \-> (locked | done)       \-> locked
//
// locked and done are terminal: no transition leaves them. A failed request
// parks the machine in error with the current selection intact; retry()
// re-issues exactly the action that failed.

import { ApiClient, ApiError, GoldFeedback, TuplePayload } from './api.js'

export type Phase =
  | 'login'
  | 'loading'
  | 'annotating'
  | 'submitting'
  | 'feedback'
  | 'locked'
  | 'done'
  | 'error'

export type FlowState = {
  phase: Phase
  tuple: TuplePayload | null
  most: string | null
  least: string | null
  inlineMessage: string | null
  feedback: GoldFeedback | null
  accuracy: number | null
  contributed: number
  errorMessage: string | null
}

export const LOCKOUT_EXPLANATION =
  'Your accuracy on the interspersed check questions fell below 70%, so ' +
  'annotation is closed for this session and your previous answers were set ' +
  'aside. Thank you for your time.'

const SAME_CARD_MESSAGE = 'MOST and LEAST cannot be the same speaker; pick a different card.'

type PendingAction = 'start' | 'load' | 'submit' | null

export class AnnotationFlow {
  state: FlowState = {
    phase: 'login',
    tuple: null,
    most: null,
    least: null,
    inlineMessage: null,
    feedback: null,
    accuracy: null,
    contributed: 0,
    errorMessage: null,
  }

  private pending: PendingAction = null
  private annotatorId = ''

  constructor(
    private readonly api: ApiClient,
    private readonly taskId: string,
    private readonly onChange: (state: FlowState) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.state)
  }

  private fail(action: Exclude<PendingAction, null>, err: unknown): void {
    if (err instanceof ApiError && err.code === 'locked_out') {
      this.state.phase = 'locked'
      this.emit()
      return
    }
    this.pending = action
    this.state.phase = 'error'
    this.state.errorMessage =
      err instanceof Error ? err.message : 'request failed; check the connection'
    this.emit()
  }

  get canSubmit(): boolean {
    return (
      this.state.phase === 'annotating' &&
      this.state.most !== null &&
      this.state.least !== null &&
      this.state.most !== this.state.least
    )
  }

  async start(annotatorId: string): Promise<void> {
    if (this.state.phase !== 'login' && this.state.phase !== 'error') return
    this.annotatorId = annotatorId
    this.state.phase = 'loading'
    this.emit()
    try {
      if (!this.api.hasSession) {
        await this.api.openSession(annotatorId)
      }
    } catch (err) {
      this.fail('start', err)
      return
    }
    await this.loadNext()
  }

  private async loadNext(): Promise<void> {
    this.state.phase = 'loading'
    this.state.tuple = null
    this.state.most = null
    this.state.least = null
    this.state.inlineMessage = null
    this.state.feedback = null
    this.emit()
    try {
      const result = await this.api.getTuple(this.taskId)
      if (result.kind === 'exhausted') {
        this.state.phase = 'done'
        this.state.contributed = result.contributed
      } else {
        this.state.phase = 'annotating'
        this.state.tuple = result.tuple
      }
      this.emit()
    } catch (err) {
      this.fail('load', err)
    }
  }

  selectMost(itemId: string): void {
    if (this.state.phase !== 'annotating') return
    if (this.state.least === itemId) {
      this.state.inlineMessage = SAME_CARD_MESSAGE
      this.emit()
      return
    }
    this.state.most = itemId
    this.state.inlineMessage = null
    this.emit()
  }

  selectLeast(itemId: string): void {
    if (this.state.phase !== 'annotating') return
    if (this.state.most === itemId) {
      this.state.inlineMessage = SAME_CARD_MESSAGE
      this.emit()
      return
    }
    this.state.least = itemId
    this.state.inlineMessage = null
    this.emit()
  }

  async submit(): Promise<void> {
    if (!this.canSubmit || this.state.tuple === null) return
    const { tuple } = this.state
    const most = this.state.most as string
    const least = this.state.least as string
    this.state.phase = 'submitting'
    this.emit()
    try {
      const verdict = await this.api.submitResponse(this.taskId, tuple.tuple_id, most, least)
      this.state.contributed += verdict.accepted ? 1 : 0
      this.state.feedback = verdict.gold_feedback
      if (verdict.accuracy !== null) {
        this.state.accuracy = verdict.accuracy
      }
      this.state.phase = verdict.locked ? 'locked' : 'feedback'
      this.emit()
    } catch (err) {
      this.fail('submit', err) // selection stays put; retry() resubmits
    }
  }

  async continueNext(): Promise<void> {
    if (this.state.phase !== 'feedback') return
    await this.loadNext()
  }

  async retry(): Promise<void> {
    if (this.state.phase !== 'error' || this.pending === null) return
    const action = this.pending
    this.pending = null
    this.state.errorMessage = null
    if (action === 'start') {
      this.state.phase = 'login'
      await this.start(this.annotatorId)
    } else if (action === 'load') {
      await this.loadNext()
    } else {
      this.state.phase = 'annotating'
      this.emit()
      await this.submit()
    }
  }
}
