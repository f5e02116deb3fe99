// Typed client for the annotation service JSON API. The fetch function is
// injectable so the flow can be driven against a stubbed service in tests.

export type TupleItem = { id: string; text: string }

export type TuplePayload = {
  tuple_id: string
  items: TupleItem[]
  emotion: string
  question_html: string
}

export type ExhaustedPayload = { exhausted: true; contributed: number }

export type TupleResult =
  | { kind: 'tuple'; tuple: TuplePayload }
  | { kind: 'exhausted'; contributed: number }

export type GoldFeedback = { correct: boolean; message: string }

export type Verdict = {
  accepted: boolean
  gold_feedback: GoldFeedback | null
  accuracy: number | null
  locked: boolean
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message)
  }
}

async function parseError(res: Response): Promise<ApiError> {
  let code = 'http_error'
  let message = `${res.status}`
  try {
    const body = await res.json()
    if (body && body.error) {
      code = body.error.code ?? code
      message = body.error.message ?? message
    }
  } catch {
    // non-JSON error body; keep the defaults
  }
  return new ApiError(res.status, code, message)
}

export class ApiClient {
  private token: string | null = null

  constructor(
    private readonly fetchFn: FetchLike,
    private readonly base: string = '',
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} as Record<string, string> }
    if (body !== undefined) {
      ;(init.headers as Record<string, string>)['Content-Type'] = 'application/json'
      init.body = JSON.stringify(body)
    }
    if (this.token) {
      ;(init.headers as Record<string, string>)['Authorization'] = `Bearer ${this.token}`
    }
    const res = await this.fetchFn(this.base + path, init)
    if (!res.ok) {
      throw await parseError(res)
    }
    return (await res.json()) as T
  }

  async openSession(annotatorId: string): Promise<void> {
    const out = await this.call<{ token: string }>('POST', '/api/session', {
      annotator_id: annotatorId,
    })
    this.token = out.token
  }

  get hasSession(): boolean {
    return this.token !== null
  }

  async getTuple(taskId: string): Promise<TupleResult> {
    const out = await this.call<TuplePayload | ExhaustedPayload>(
      'GET',
      `/api/task/${encodeURIComponent(taskId)}/tuple`,
    )
    if ('exhausted' in out && out.exhausted) {
      return { kind: 'exhausted', contributed: out.contributed }
    }
    return { kind: 'tuple', tuple: out as TuplePayload }
  }

  async submitResponse(
    taskId: string,
    tupleId: string,
    best: string,
    worst: string,
  ): Promise<Verdict> {
    return this.call<Verdict>(
      'POST',
      `/api/task/${encodeURIComponent(taskId)}/response`,
      { tuple_id: tupleId, best, worst },
    )
  }
}
