#include "odis/prompts.hpp"

#include <map>

namespace odis {

namespace {

const char* kCoherence =
    R"(Below is an extract from a web page. Evaluate whether the text demonstrates high coherence in terms of language quality. Please follow the following guideline to assess the language quality of the given extract on a 4 likert scale:

0 Point: Incomprehensible
- The text is grammatically chaotic and difficult to understand.
- Severe errors in structure, agreement, and tense prevent understanding.

1 Point: Partially Readable
- Some sentences are clear, but overall clarity is lacking.
- Noticeable grammatical errors and inconsistency disrupt smooth reading.

2 Points: Moderately Coherent
- Occasional language issues but overall understandable.
- Logical flow is maintained with some awkward phrasing.

3 Points: Generally Coherent with Minor Errors
- Paragraphs progress logically with minor, infrequent language errors.
- Sentences are generally well-formed with consistent tense and clear subject-verb agreement.

4 Points: Exceptionally Coherent
- The text is grammatically flawless, with precise subject-verb agreement and tense usage.
- Sentence and paragraph structure is logically ordered and fluid.
- Punctuation and syntax enhance the clarity and flow of ideas.

The extract:  {text}
After examining the extract:
 - Briefly justify your total score, up to 50 words.
 - Conclude begin with the score using the format: "Language Coherence Score: <total points>")";

const char* kConciseness =
    R"(Below is an extract from a web page. Evaluate whether the text demonstrates a high level of conciseness. Please follow the following guideline to assess the conciseness of the given extract on a 4 likert scale:

0 Point: Excessively Wordy
- The extract is filled with redundant, unrelated, or repetitive language.
- Nearly every sentence could be significantly shortened or removed without loss of meaning.
- Core ideas are obscured or lost in verbosity.

1 Point: Somewhat Wordy
- The text is clear but contains noticeable repetition or unnecessary words.
- Some sentences are overly elaborate.

2 Points: Moderately Concise
- The extract avoids major redundancy but may include some unnecessary elaboration.
- Most sentences convey meaning efficiently, though small improvements in brevity are possible.
- The main points are clear and not lost in superfluous language.

3 Points: Concise and Effective
- Ideas are expressed clearly and directly, with minor redundancy or unnecessary details.
- Minimal to no repetition or fluff.

4 Points: Exceptionally Concise
- Every word is essential and contributes directly to the meaning.
- No repetition, filler, or unnecessary elaboration.
- The writing is focused, impactful, and efficient.


- The extract:  {text}

After examining the extract:
 - Briefly justify your total score, up to 50 words.
 - Conclude begin with the score using the format: "Language Conciseness Score: <total points>")";

const char* kSpellingAccuracy =
    R"(Below is an extract from a web page.  Evaluate whether the text demonstrates high accuracy of word usage, which contributes to the as overall language quality. Please follow the following guideline to assess the accuracy of word usage in the given extract on a 4 likert scale:

0 Points: Severe Inaccuracy
- The extract contains frequent incorrect word usages.
- Frequent typos, incorrect word forms, or misuse of words make the text almost unreadable.
- Errors severely hinder understanding.

1 Points: Limited Accuracy
- Spelling mistakes appear regularly but are not overwhelming.
- Occasional misuse of words or minor typos affect clarity.
- The overall message is still understandable but occasionally unclear.

2 Points: Moderate Accuracy
- Most of the text is correctly spelled, with some minor errors or infrequent typos.
- Occasional confusion between similar-sounding words may appear but does not significantly affect meaning.
- The extract remains mostly readable and understandable.

3 Points: Strong Accuracy
- Spelling is generally correct throughout.
- Only rare, minor typos or homophone errors are present, and they do not interfere with comprehension.
- The extract demonstrates clear attention to written accuracy.

4 Points: Perfect Accuracy
- The extract is free from any spelling errors, typos, or homophone confusion.
- All words are used appropriately and are correctly spelled.
- The writing is polished and precise, reflecting excellent language control.

The extract:  {text}

After examining the extract:
 - Briefly justify your total score, up to 50 words.
 - Conclude begin with the score using the format: "Language Spelling Accuracy Score: <total points>")";

const char* kKnowledgeDepth =
    R"(Below is an extract from a web page. Evaluate whether the text demonstrates an appropriate depth of knowledge, particularly with regard to the grade level it targets. The following gudeline is used to assess whether a text has a high knowledge depth on a 5 likert scale:

0 Points: No Knowledge Depth
- The extract contains no meaningful or accurate knowledge.
- It lacks substance entirely and offers no educational value at any grade level.

1 Point: Shallow and Common Knowledge for Pre-K to Grade 1
- The content is understandable even to early primary grades (Pre-K to Grade 1).
- Contain simple, basic facts or common knowledge (e.g., basic facts like "grass is green" or "2 + 2 = 4").

2 Points: Basic Knowledge for Lower Grades (Grades 2-4)
- The content is at lower elementary levels.
- Introduces simple concepts and provides very short, basic explanations.
- Requires understanding of simple definitions and explicit information.

3 Points: Introductory Knowledge for Middle Grades (Grades 5-7)
- Understandable for upper elementary to early middle school.
- Explains foundational concepts with some detail and structure.
- Some depth is present. It may require understanding of cause-and-effect relationships and ability to follow multi-step explanations.

4 Points: Substantive Knowledge for Secondary Levels (Grades 8-12)
- Content is well-developed and appropriate for high school.
- Explores concepts in depth, including underlying principles, reasoning, and potential implications.
- Characterized by complex sentence structures, theoretical concepts, evidence or examples to support points; resembles textbook content.

5 Points: Advanced Knowledge Depth (college-level or graduate-level)
- The extract reflects college-level or graduate-level understanding.
- The knowledge is usually only known to the professional people in a certain field.
- May presents complex information, including detailed analysis, theoretical frameworks, multiple perspectives, and nuanced arguments.

The extract:  {text}

After examining the extract:
 - Briefly justify your total score, up to 50 words.
 - Conclude begin with the score using the format: "Knowledge Depth Score: <total points>")";

const char* kKnowledgeRichness =
    R"(Below is an extract from a web page. Evaluate whether the text demonstrates a high degree of knowledge density in its content. The following curriculum is used to assess whether a text has dense knowledge on a 4 likert scale:

0 Point: No Meaningful Knowledge
- The extract lacks any meaningful or specific content.
- No concrete facts, data, or identifiable concepts

1 Point: Minimal Knowledge Content
- Contains only 1-2 disjointed factual statements
- No context, sourcing, or explanation

2 Points: Moderately Knowledge Density
- The extract includes several points of useful knowledge.
- Support with some details, examples, or explanations.

3 Points: Substantially Rich in Knowledge
- The content provides a well-rounded and informative discussion.
- Ideas are explained with clarity and supported by relevant details or examples.

4 Points: Exceptionally Knowledge-Rich
- The extract offers a dense, nuanced, and well-connected presentation of knowledge.
- The content shows breadth and depth, encouraging comprehensive understanding.

The extract:  {text}

After examining the extract:
 - Briefly justify your total score, up to 50 words.
 - Conclude begin with the score using the format: "Knowledge Richness Score: <total points>")";

const char* kReasoning =
    R"(Below is an extract from a web page. Evaluate whether the text demonstrates a high level of reasoning level. The following curriculum is used to assess whether a text has a high reasoning level:

0 Points: No Reasoning Present
- The text lacks any evidence of thinking or reasoning from the writer.

1 Point: Minimal Reasoning
- Some claims are made, but reasoning is largely absent or extremely shallow.
- No causal relationships or inferential steps are evident.
- Readers are not encouraged to reflect or engage intellectually.

2 Points: Limited Reasoning
The text demonstrates some basic thinking and reasoning, such as:
- a straightforward application of a known technique
- simple analysis of a problem.

3 Points: Moderate Reasoning
The text demonstrates adequate level thinking and reasoning, such as
- a consideration of multiple approaches to a problem.
- A discussion of the trade-offs between different solutions.

4 Points: Strong Reasoning
The text demonstrates significant thinking and reasoning, such as:
- Multi-step reasoning chains to solve a complex problem.
- Advanced reasoning patterns often used in specialized science domains

5 Points: Exceptional Reasoning Quality
The text exemplifies exceptional thinking and reasoning, such as:
- A highly innovative and creative approach to solving a complex problem in specialized domains.
- Combining multiple reasoning and thinking techniques, with novel abstraction of the problem.

The extract:  {text}

After examining the extract:
 - Briefly justify your total score, up to 50 words.
 - Conclude begin with the score using the format: "Knowledge Reasoning Score: <total points>")";

const char* kEducationalValue =
    R"(Below is an extract from a web page. Evaluate whether the page has a high educational value for teaching from kindergarten to graduate education. The following curriculum is used to assess whether a text has a high educational value on a 3 point scale:

**0 Point: No Educational Value**
- Not even a single bit of information is worth learning.
- Note that if there is even a single bit of information that is worth learning, the score should be at least 1 point.

**1 Point: Minimal Educational Relevance**
- The extract provides some useful information pertinent that is worth learning or teaching, but does not align closely with educational standards.
- It may include a large amount of non-educational content (e.g., advertisements, promotional material) that detracts from its usefulness.

**2 Points: Suitable for Educational Use**
- The extract provides a lot of useful information that is worth learning or teaching. The content is fluent and coherent.
- It may include a small amount of non-educational content. It may have limitations, such as incomplete coverage or extraneous information.

**3 Points: Highly Relevant and Beneficial**
- The extract has very high educational value. It contains high density of information that is worth learning or teaching, either for any level of education.
- Content is clear, consistent, and focused, with minimal irrelevant information.
- May resemble a snippet from a textbook, tutorial, exercises, solutions, or any structured learning materials.

The extract:
{text}

After examining the extract:
- Briefly justify your total score, up to 50 words.
- Conclude begin with the score using the format: "Educational score: <the assigned score>")";

const char* kPracticalHelpfulness =
    R"(Below is an extract from a web page.  Evaluate whether the content demonstrates a high degree of practical helpfulness, particularly in terms of offering applicable knowledge for real-world utility. The following curriculum is used to assess whether a text has a high practical helpfulness on a 4 likert scale:

0 Points: No Practical Helpfulness
- The extract contains no useful or applicable knowledge.
- May be purely entertainment or advertisement with zero actionable takeaways
- May contain misinformation or harmful suggestions

1 Point: Minor Utility
- The text may hint at applicable ideas but lacks clarity, specificity, or guidance.
- It is too general or abstract to be put into use.

2 Points: Moderately Helpfulness
- The knowledge can be applicable in some uncommon scenarios.

3 Points: Broadly Helpful
- The extract includes practical information that could be applied in common contexts.
- Offers validated strategies for common needs

4 Points: Substantially Helpful
- The extract offers clear, applicable knowledge or skills that are useful in real-world scenarios that frequently occur.
- Addresses frequent pain points


The extract:  {text}

After examining the extract:
 - Briefly justify your total score, up to 50 words.
 - Conclude begin with the score using the format: "Knowledge Practical Helpfulness Score: <total points>")";

const char* kComprehensionDifficulty =
    R"(Here is an extract from a webpage. Please evaluate the percentage of the global population that is likely to be able to comprehend the knowledge text. The following scale is used to assess the comprehension difficulty, with a 5-point Likert scale:

0 Points: No value to understand
- The content is incomprehensible due to its low language quality.
- Contains gibberish, severe grammar errors, or formatting problems.
- Examples: Advertisement, machine-translated nonsense, corrupted text

1 Point: Universal Comprehension
- The content is very simple and direct, easily understood by the vast majority of people.
- Requies basic vocabulary (<4th grade level), commonsense knowledge, with no jargon.
- Examples: Weather reports, simple recipes, basic safety instructions

2 Points: Majority Effortless
The content is clear and easily understandable for almost everyone, with only a very small percentage finding it difficult.
- Requires conversational language level and general world knowledge
- Examples: social media posts, most new articles

3 Points: Educated Majority
- The content is accessible to the majority of people, with some difficulty, but most people should be able to understand and comprehend it after some effort.
- Requires high school reading level and secondary education concepts
- Examples: Government pamphlets, workplace training manuals, simple financial advice.

4 Points: Specialized Audience
- The content is understood by a small portion of people, but it remains challenging for the majority.
- The content may require some expertise.
-  Requires undergraduate-level training in field
-  Examples: College textbooks, legal contracts, financial advice

5 Points: Expertise
- The content may be very professional or academic.
- Requires graduate-level expertise.
- Examples: Quantum physics proofs, AI architecture patents, genomic research

Extract:
 {text}

After reviewing the text:
Briefly justify your total score in up to 50 words.
Conclude begin with the score using the format: "Comprehension Difficulty Score: ")";

const char* kFactualAccuracy =
    R"(Here is an extract from a webpage. Evaluate whether the content demonstrates a high level of factual accuracy as part of its overall information quality.
Note that:
- the text may include some facts that are unknown to you. In these cases, you can ignore these unknown or uncertain facts and only focus on identify those obvious factual errors that are known to you.
- In some special contexts, such as fictions, it is allowed to contain some imaginary facts.


The following guideline is used to assess the factual accuracy, with a 3-point Likert scale:

0 Point: Evidently Inaccurate
- The extract is filled with incorrect information.
- Key claims are demonstrably wrong or contradict well-established facts.

1 Point: Highly Unreliable
- The extract contains multiple factual inaccuracies or distortions.
- Misleading phrasing or vague statements obscure the truth.
- While not entirely false, it cannot be trusted as a reliable source of information.

2 Points: Generally Accurate with Minor Issues
- <2 minor errors in peripheral details
- Occasional imprecise language without distorting meaning
- Preserves core truth despite technical imperfections

3 Points: Accurate and Trustworthy
- No detectable errors in verifiable claims.


Extract:
 {text}

After reviewing the text:
- Briefly justify your total score in up to 50 words.
- Conclude begin with the score using the format: "Information Factual Accuracy Score:")";

const char* kCompleteness =
    R"(Here is an extract from a webpage.  Evaluate whether the content demonstrates a high degree of completeness, specifically in terms of how fully the topic is covered and whether the information is presented with sufficient context. The following scale is used to assess the information completeness, with a 4-point Likert scale:


0 Point: Severely Incomplete
The extract offers only fragments of information or vague references to the topic.
Key background, definitions, or context are missing.
The presentation leaves readers with more questions than answers.

1 Point: Limited Completeness
The extract touches on parts of the topic but leaves significant gaps.
It may assume prior knowledge or skip necessary context.
Information is partial or unevenly distributed.

2 Points: Moderately Complete
The extract introduces the main topic and provides sufficient context to follow the discussion.
Some areas may be underdeveloped or missing, but overall understanding is possible.
It resembles a summary or introductory passage.

3 Points: Substantially Complete
The extract covers the topic in a well-rounded and balanced manner.
Most relevant aspects are addressed, with clear and sufficient context.
There may be minor omissions, but they do not disrupt comprehension.

4 Points: Exceptionally Complete
The extract thoroughly explores the topic with comprehensive coverage.
All necessary context is included, with no critical gaps.
It reflects a deep and well-structured presentation that anticipates and answers potential reader questions.

Extract:
 {text}

After reviewing the text:
Briefly justify your total score in up to 50 words.
Conclude begin with the score using the format: "Information Completeness Score: ")";

const std::map<std::string, const char*>& template_registry() {
  static const std::map<std::string, const char*> templates = {
      {"coherence", kCoherence},
      {"conciseness", kConciseness},
      {"spelling_accuracy", kSpellingAccuracy},
      {"knowledge_depth", kKnowledgeDepth},
      {"knowledge_richness", kKnowledgeRichness},
      {"reasoning", kReasoning},
      {"educational_value", kEducationalValue},
      {"practical_helpfulness", kPracticalHelpfulness},
      {"comprehension_difficulty", kComprehensionDifficulty},
      {"factual_accuracy", kFactualAccuracy},
      {"completeness", kCompleteness},
  };
  return templates;
}

}  // namespace

const std::string& prompt_template(const std::string& dimension_name) {
  const auto& reg = template_registry();
  auto it = reg.find(dimension_name);
  if (it == reg.end())
    throw OdisError("no prompt template for dimension '" + dimension_name + "'");
  static std::map<std::string, std::string> cache = [] {
    std::map<std::string, std::string> c;
    for (const auto& [name, text] : template_registry()) c[name] = text;
    return c;
  }();
  return cache.at(dimension_name);
}

std::string render_prompt(const Document& doc, const DimensionSpec& dim) {
  if (doc.text.empty())
    throw OdisError("render_prompt: empty document text for '" + doc.id + "'");
  const std::string& tmpl = prompt_template(dim.name);
  size_t slot = tmpl.find("{text}");
  if (slot == std::string::npos)
    throw OdisError("prompt template for '" + dim.name + "' has no {text} slot");
  std::string out;
  out.reserve(tmpl.size() + doc.text.size());
  out.append(tmpl, 0, slot);
  out.append(doc.text);
  out.append(tmpl, slot + 6, std::string::npos);
  return out;
}

}  // namespace odis
