// Questionnaire wording parameterized by the task's emotion.

export const EMOTION_ADJECTIVE: Record<string, string> = {
  anger: 'angry',
  fear: 'fearful',
  joy: 'joyful',
  sadness: 'sad',
}

export type Questionnaire = {
  heading: string
  intro: string
  notes: string[]
  mostQuestion: string
  leastQuestion: string
}

export function renderQuestionnaire(emotion: string): Questionnaire {
  const adj = EMOTION_ADJECTIVE[emotion]
  if (!adj) {
    throw new Error(`unknown emotion: ${emotion}`)
  }
  return {
    heading: `How ${adj} does each speaker sound?`,
    intro:
      `Below are four tweets from four different speakers. Reading each tweet, ` +
      `judge how ${adj} its speaker probably felt while writing it, then answer ` +
      `the two questions.`,
    notes: [
      'Rate the speaker of the tweet, not anyone the tweet talks about or to.',
      `If two speakers seem equally ${adj}, pick whichever one; do not agonize.`,
      'Go with your first impression; there is no need to overthink.',
    ],
    mostQuestion: `Q1. Which of the four speakers is likely the MOST ${adj}?`,
    leastQuestion: `Q2. Which of the four speakers is likely the LEAST ${adj}?`,
  }
}

export function questionnaireHtml(emotion: string): string {
  const q = renderQuestionnaire(emotion)
  const notes = q.notes.map((n) => `<li>${n}</li>`).join('')
  return (
    `<div class="questionnaire"><h2>${q.heading}</h2><p>${q.intro}</p>` +
    `<ul>${notes}</ul>` +
    `<p class="question">${q.mostQuestion}</p>` +
    `<p class="question">${q.leastQuestion}</p></div>`
  )
}
