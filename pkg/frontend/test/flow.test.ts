import { describe, expect, it } from 'vitest'

import { ApiClient } from '../src/api.js'
import { AnnotationFlow } from '../src/flow.js'
import { StubService, goldTuple, regularTuple } from './stub.js'

function makeFlow(stub: StubService) {
  const api = new ApiClient(stub.fetchLike)
  return new AnnotationFlow(api, 'task1')
}

function currentItems(flow: AnnotationFlow): string[] {
  return (flow.state.tuple?.items ?? []).map((i) => i.id)
}

async function answerCurrent(flow: AnnotationFlow, best: number, worst: number) {
  const ids = currentItems(flow)
  flow.selectMost(ids[best])
  flow.selectLeast(ids[worst])
  await flow.submit()
}

describe('annotation flow', () => {
  it('drives a full annotate -> gold-feedback -> lockout session', async () => {
    // two regular tuples, then four golds; we answer all golds wrong
    const stub = new StubService({
      tuples: [regularTuple(1), regularTuple(2), goldTuple(3), goldTuple(4), goldTuple(5), goldTuple(6)],
    })
    const flow = makeFlow(stub)
    await flow.start('worker')
    expect(flow.state.phase).toBe('annotating')

    // two regular responses: accepted, no gold feedback
    for (let k = 0; k < 2; k++) {
      await answerCurrent(flow, 0, 3)
      expect(flow.state.phase).toBe('feedback')
      expect(flow.state.feedback).toBeNull()
      await flow.continueNext()
    }

    // three wrong golds: immediate feedback each time, not yet locked
    for (let k = 0; k < 3; k++) {
      await answerCurrent(flow, 3, 0) // inverted answer = wrong
      expect(flow.state.phase).toBe('feedback')
      expect(flow.state.feedback?.correct).toBe(false)
      expect(flow.state.feedback?.message).toMatch(/incorrectly/)
      expect(flow.state.accuracy).toBe(0)
      await flow.continueNext()
    }

    // the fourth wrong gold crosses the 70% rule: terminal lockout screen
    await answerCurrent(flow, 3, 0)
    expect(flow.state.phase).toBe('locked')
    expect(flow.state.contributed).toBe(6)
  })

  it('lockout is terminal: no interaction leaves it or hits the network', async () => {
    const stub = new StubService({
      tuples: [goldTuple(1), goldTuple(2), goldTuple(3), goldTuple(4), regularTuple(5)],
    })
    const flow = makeFlow(stub)
    await flow.start('w')
    for (let k = 0; k < 4; k++) {
      await answerCurrent(flow, 3, 0)
      if (flow.state.phase === 'feedback') await flow.continueNext()
    }
    expect(flow.state.phase).toBe('locked')
    const callsAtLockout = stub.calls.length
    await flow.continueNext()
    await flow.submit()
    flow.selectMost('anything')
    await flow.retry()
    expect(flow.state.phase).toBe('locked')
    expect(stub.calls.length).toBe(callsAtLockout)
  })

  it('locked-out tuple fetch also lands on the lockout screen', async () => {
    const stub = new StubService({ tuples: [goldTuple(1)], minGold: 1 })
    const flow = makeFlow(stub)
    await flow.start('w')
    await answerCurrent(flow, 3, 0) // instantly locked (minGold=1)
    expect(flow.state.phase).toBe('locked')
  })

  it('rejects selecting the same card for MOST and LEAST', async () => {
    const stub = new StubService({ tuples: [regularTuple(1)] })
    const flow = makeFlow(stub)
    await flow.start('w')
    const ids = currentItems(flow)
    flow.selectMost(ids[1])
    flow.selectLeast(ids[1]) // second selection rejected
    expect(flow.state.least).toBeNull()
    expect(flow.state.inlineMessage).toMatch(/same speaker/)
    expect(flow.canSubmit).toBe(false)
    const calls = stub.calls.length
    await flow.submit() // unsubmittable
    expect(stub.calls.length).toBe(calls)
    // picking a different card clears the message
    flow.selectLeast(ids[2])
    expect(flow.state.inlineMessage).toBeNull()
    expect(flow.canSubmit).toBe(true)
  })

  it('submit is a no-op until both questions are answered', async () => {
    const stub = new StubService({ tuples: [regularTuple(1)] })
    const flow = makeFlow(stub)
    await flow.start('w')
    const calls = stub.calls.length
    await flow.submit()
    flow.selectMost(currentItems(flow)[0])
    await flow.submit()
    expect(stub.calls.length).toBe(calls)
  })

  it('network failure on submit keeps the selection and retry resubmits it', async () => {
    const stub = new StubService({
      tuples: [regularTuple(1)],
      failures: { 'POST /api/task/task1/response': 1 },
    })
    const flow = makeFlow(stub)
    await flow.start('w')
    const ids = currentItems(flow)
    flow.selectMost(ids[2])
    flow.selectLeast(ids[0])
    await flow.submit()
    expect(flow.state.phase).toBe('error')
    expect(flow.state.most).toBe(ids[2])
    expect(flow.state.least).toBe(ids[0])
    await flow.retry()
    expect(flow.state.phase).toBe('feedback')
    const submits = stub.calls.filter((c) => c.includes('/response'))
    expect(submits.length).toBe(2)
  })

  it('network failure on load retries without losing the session', async () => {
    const stub = new StubService({
      tuples: [regularTuple(1)],
      failures: { 'GET /api/task/task1/tuple': 1 },
    })
    const flow = makeFlow(stub)
    await flow.start('w')
    expect(flow.state.phase).toBe('error')
    await flow.retry()
    expect(flow.state.phase).toBe('annotating')
    expect(stub.calls.filter((c) => c.startsWith('POST /api/session')).length).toBe(1)
  })

  it('exhaustion shows the completion screen with the contribution count', async () => {
    const stub = new StubService({ tuples: [regularTuple(1), regularTuple(2)] })
    const flow = makeFlow(stub)
    await flow.start('w')
    await answerCurrent(flow, 0, 1)
    await flow.continueNext()
    await answerCurrent(flow, 1, 2)
    await flow.continueNext()
    expect(flow.state.phase).toBe('done')
    expect(flow.state.contributed).toBe(2)
  })

  it('never double-submits while a request is in flight', async () => {
    let release: (r: Response) => void = () => {}
    const gate = new Promise<Response>((resolve) => (release = resolve))
    const stub = new StubService({ tuples: [regularTuple(1)] })
    const real = stub.fetchLike
    let pendingSubmit = false
    const api = new ApiClient((input, init) => {
      if (String(init?.method) === 'POST' && input.endsWith('/response') && !pendingSubmit) {
        pendingSubmit = true
        void real(input, init).then((r) => release(r))
        return gate
      }
      return real(input, init)
    })
    const flow = new AnnotationFlow(api, 'task1')
    await flow.start('w')
    const ids = currentItems(flow)
    flow.selectMost(ids[0])
    flow.selectLeast(ids[1])
    const first = flow.submit()
    expect(flow.state.phase).toBe('submitting')
    await flow.submit() // ignored: no longer in annotating phase
    const responses = stub.calls.filter((c) => c.includes('/response'))
    expect(responses.length).toBe(1)
    await first
    expect(flow.state.phase).toBe('feedback')
  })
})
