import { describe, expect, it } from 'vitest'

import { ApiClient, ApiError } from '../src/api.js'
import { StubService, regularTuple } from './stub.js'

describe('api client', () => {
  it('opens a session and sends the bearer token afterwards', async () => {
    const seen: string[] = []
    const stub = new StubService({ tuples: [regularTuple(1)] })
    const api = new ApiClient((input, init) => {
      const headers = (init?.headers ?? {}) as Record<string, string>
      seen.push(headers['Authorization'] ?? '')
      return stub.fetchLike(input, init)
    })
    expect(api.hasSession).toBe(false)
    await api.openSession('alice')
    expect(api.hasSession).toBe(true)
    await api.getTuple('task1')
    expect(seen[0]).toBe('')
    expect(seen[1]).toBe('Bearer stub-token')
  })

  it('surfaces structured errors as ApiError', async () => {
    const api = new ApiClient(() =>
      Promise.resolve(
        new Response(JSON.stringify({ error: { code: 'locked_out', message: 'nope' } }), {
          status: 403,
        }),
      ),
    )
    await api.openSession('x').catch(() => {})
    const err = await api.getTuple('t').catch((e) => e)
    expect(err).toBeInstanceOf(ApiError)
    expect(err.code).toBe('locked_out')
    expect(err.status).toBe(403)
  })

  it('distinguishes exhaustion from a tuple payload', async () => {
    const stub = new StubService({ tuples: [] })
    const api = new ApiClient(stub.fetchLike)
    await api.openSession('a')
    const out = await api.getTuple('task1')
    expect(out.kind).toBe('exhausted')
  })
})
