// Prompt bodies for every model call. Slots use ${name} syntax and are
// filled by render().

#include <string>

#include "interflow/errors.hpp"
#include "interflow/gateway.hpp"

namespace interflow {

namespace {

constexpr std::string_view kScriptParse = R"P(Analyze the given interview script and extract question categories, the main questions for each category, and sub-questions under each main question.

Return the result in the following JSON format:
[
  {
    "category": "Stage 1",
    "questions": [
      {
        "main_question": "",
        "sub_questions": [
          { "sub_question": "" },
          { "sub_question": "" }
        ]
      },
      {
        "main_question": "",
        "sub_questions": [
          { "sub_question": "" }
        ]
      }
    ]
  },
  {
    "category": "Stage 2",
    "questions": [
      {
        "main_question": "",
        "sub_questions": []
      }
    ]
  }
]
Make sure the output is valid JSON. Extract the intro that provides context or background for the questions in each category.

Interview script:
${script})P";

constexpr std::string_view kSummary = R"P(This is the transcript of an interview, please infer who is the interviewee, and then give me an extractive summary of what the interviewee said, that answers the interviewer's question.

Reply with no more than seven words, do not include meaningless words such as "interviewee describes..."
${focus}
Transcript:
${transcript})P";

constexpr std::string_view kSituationDetect = R"P(You are an observer of a semi-structured interview regarding the research question: ${research_question} and the background: ${background}.

Your ONLY job is to return the situation where a follow up or probe is needed, following the rules listed below.

Cases that needs probe:
To manage the conversation, ask for elaboration, detail. Keep the interview on target. Ask for clarification, examples, evidence.
1.1 Help reveal slant or bias. The response is unclear or too general, e.g. "It just feels better that way." Or when the interviewee refers to shared knowledge, or uses unclear pronouns, gestures or jargon e.g. "you know how it is", "everyone does that".
1.2 When the interviewee hesitates, self-corrects, feels down, which could signal discomfort, deeper meaning. e.g. "Well... I mean... not exactly..."

Cases that needs follow up:
To get depth, detail, richness, vividness and nuance, helping to assure thoroughness and credibility. Explore relevant events, concepts, and themes. Designed in response to the comments or ideas introduced by the conversational partner.
2.1 New concept or theme emerged that is relevant to the research question ${research_question}, especially when the interviewee said a substitute word or relevant term. e.g. interviewer asked about user experience for the car seat in the interviewee's own car, but interviewee started to talk about car seat problem in school bus.
2.2 When there is apparent contradiction or inconsistency in what the interviewee has said. e.g. "I don't think ads bother me." / "Sometimes ads are so annoying..." or "You told me before that the hats were green, but just now you referred to them as blue. Are they sometimes green and sometimes blue, or do they just look blue to you sometimes?"

Please return the summarized content of conversation you detected that matches the situation in no more than one sentence, and then give me the number of the situation.

The output should be in the following format:
{
  "situation": "The specific content in the conversation",
  "number": "The number of the situation(e.g. 1.1, 1.2, 2.1, 2.2)"
}

Notes taken by the interviewer so far:
${notes}

Earlier interviewee statements:
${history}

Latest utterance (${speaker}):
${utterance})P";

constexpr std::string_view kExpandProbe = R"P(Based on the situation detected, please check what kind of probe is suitable based on the conversational context: ask for clarification, or ask for evidence and example.

Detected situation (${code}): ${excerpt}

Conversational context:
${transcript})P";

constexpr std::string_view kExpandFollowup = R"P(Based on the situation detected, please check what kind of follow-up strategy is suitable based on the conversational context:

Strategies about follow-up on concepts:
What to follow up on:
1. Negated concepts or concepts with negative meanings
2. Comments, attitudes, or emotional expressions
General Strategies:
1. Repeat or paraphrase to confirm
2. Request a definition
POS-based Strategies:
1. Reduce the scope of a noun concept
2. Probe details about a verb concept
3. Probe the degree or the reason of an adjective or adverb concept

Strategies about general follow-ups:
- Why? Request potential causes of a result or reasons for a comment, an opinion, or an expressed emotion
- Can you be more specific? Request for elaboration or details when the response PQ is too short or little specific information is provided
- And then? Request a complete timeline
- For example? Request an example for a general noun such as "thing", "content", or "object"
- What else? Ask for extra supplements when the response PQ is already adequate

Strategies for Follow-ups on Related Concepts:
General Strategies:
1. Compare between concepts
2. Clarify whether A equals B
3. Bring up another concept of the same class
4. Bring up a hypothesis or an example

POS-based Strategies:
1. When the selected concept is a noun:
   - bring up its usage or capabilities
   - bring up one of its attributes
   - bring up a subclass or superclass
   - request the respondent's comments on it in a certain aspect
2. When the selected concept is a verb:
   - bring up a specific timing when it happens
   - bring up a place or platform where it happens
   - bring up a tool related to it
   - bring up a certain way or degree it happens in
   - bring up its cause or consequence
   - bring up its precondition
3. When the selected concept is an adjective or an adverb:
   - bring up its superlative degree

Detected situation (${code}): ${excerpt}

Conversational context:
${transcript})P";

constexpr std::string_view kJudge = R"P(There are several situations detected during a part of a semi-structured interview that worth following up or probing. Please rate each situation with 1-5 based on the criteria described below. The rationale is as follows:

Criteria

Correctness
Definition: Whether the detected situation is supported by the evidence from the interview transcript.
How to apply: Check if the detected situation faithfully reflects what the interviewee actually said or implied. Incorrect or hallucinated ones would fail this criterion.

Specificity
Definition: Whether the detected situation is precise and clearly distinguishable, as opposed to vague or overly general.
How to apply: Look at whether the detected situation pinpoints a concrete idea, behavior, or inconsistency, rather than repeating generic concepts (e.g., "privacy issue" vs. "no specific steps described for erasing personal data").

Coverage
Definition: Whether the detected situation captures obvious or important points without omitting critical events in the conversation.
How to apply: Examine whether the system overlooked major responses that human coders would reasonably expect to notice.

Situations:
${situations}

Transcript:
${transcript}

Return only JSON of the form {"ratings": [{"index": 1, "correctness": 1, "specificity": 1, "coverage": 1}]} with exactly one entry per situation, in the order listed.)P";

}  // namespace

std::string_view template_body(TemplateId id) {
  switch (id) {
    case TemplateId::ScriptParse: return kScriptParse;
    case TemplateId::Summary: return kSummary;
    case TemplateId::SituationDetect: return kSituationDetect;
    case TemplateId::ExpandProbe: return kExpandProbe;
    case TemplateId::ExpandFollowup: return kExpandFollowup;
    case TemplateId::Judge: return kJudge;
  }
  return {};
}

std::string render(const PromptTemplate& t) {
  std::string_view body = template_body(t.id);
  std::string out;
  out.reserve(body.size() + 256);
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto open = body.find("${", pos);
    if (open == std::string_view::npos) {
      out.append(body.substr(pos));
      break;
    }
    auto close = body.find('}', open);
    if (close == std::string_view::npos) {
      out.append(body.substr(pos));
      break;
    }
    out.append(body.substr(pos, open - pos));
    std::string slot(body.substr(open + 2, close - open - 2));
    auto it = t.slots.find(slot);
    if (it == t.slots.end())
      throw Error(ErrorCode::ConfigError, "template " + std::string(to_string(t.id)) +
                                              " slot '" + slot + "' not filled");
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

}  // namespace interflow
