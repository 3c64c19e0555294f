#include "kgrag/rag_chat.h"

#include <ctime>
#include <random>

#include <nlohmann/json.hpp>

#include "kgrag/text_util.h"

namespace kgrag {
namespace {

constexpr std::string_view kTemplate =
    R"(You are a highly knowledgeable and trusted medical research assistant specializing in age-related macular degeneration (AMD). You have access to the following additional relevant data:
{context}
Your task is to provide thorough, accurate, and detailed answers about AMD research. Please follow these guidelines precisely:
1. **Incorporate and Format Available References:**
   - Examine the provided data carefully. If you encounter any clinical trial IDs or reference numbers (e.g., NCT01291121), include them in your response.
   - Always present these references as markdown hyperlinks using the following format:
     [NCT01291121](https://app.dimensions.ai/details/clinical_trial/NCT01291121)
   - If the additional data contains reference IDs, ensure they are clearly integrated into your answer using this format.
2. **Indicate When Reference Data Is Missing:**
   - If no reference data or clinical trial IDs are available in the provided context, explicitly mention that no additional references were found.
3. **Express Uncertainty When Necessary:**
   - If you do not have enough information to answer confidently, clearly state the limitations and specify what extra details or data would be needed.
4. **Maintain Accuracy and Integrity:**
   - Do not fabricate any references or information. Base your answer solely on verified data and the provided context.
5. **Communicate Professionally and Clearly:**
   - Deliver your response in a clear, well-organized, and professional tone, ensuring that complex information is accessible and understandable.
Please begin your response below.)";

constexpr std::string_view kSlot = "{context}";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// Markdown link scan starting at a '['.
enum class LinkScan { kMatch, kNoMatch, kOpen };

struct LinkResult {
  LinkScan kind;
  std::size_t end = 0;  // one past ')' when matched
};

LinkResult scan_link(std::string_view s, std::size_t i) {
  std::size_t j = i + 1;
  while (j < s.size() && s[j] != '[' && s[j] != ']') ++j;
  if (j == s.size()) return {LinkScan::kOpen};
  if (s[j] == '[') return {LinkScan::kNoMatch};
  ++j;
  if (j == s.size()) return {LinkScan::kOpen};
  if (s[j] != '(') return {LinkScan::kNoMatch};
  const std::size_t url_start = ++j;
  while (j < s.size() && !text::is_space(s[j]) && s[j] != '(' && s[j] != ')' && s[j] != '[' && s[j] != ']') ++j;
  if (j == s.size()) return {LinkScan::kOpen};
  if (s[j] == ')' && j > url_start) return {LinkScan::kMatch, j + 1};
  return {LinkScan::kNoMatch};
}

// Length-11 trial id at i, not followed by another digit.
bool trial_id_at(std::string_view s, std::size_t i) {
  if (s.compare(i, 3, "NCT") != 0 || i + 11 > s.size()) return false;
  for (std::size_t k = i + 3; k < i + 11; ++k) {
    if (!text::is_digit(s[k])) return false;
  }
  return i + 11 == s.size() || !text::is_digit(s[i + 11]);
}

// Walks `s`, calling on_text for verbatim bytes and on_id for bare ids.
template <typename OnText, typename OnId>
void walk(std::string_view s, OnText on_text, OnId on_id) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (s[pos] == '[') {
      auto r = scan_link(s, pos);
      if (r.kind == LinkScan::kMatch) {
        on_text(s.substr(pos, r.end - pos));
        pos = r.end;
        continue;
      }
    } else if (s[pos] == 'N' && trial_id_at(s, pos)) {
      on_id(s.substr(pos, 11));
      pos += 11;
      continue;
    }
    on_text(s.substr(pos, 1));
    ++pos;
  }
}

bool valid_session_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    if (!text::is_alpha(c) && !text::is_digit(c) && c != '-' && c != '_') return false;
  }
  return true;
}

}  // namespace

std::string iso8601_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof buf - n, ".%03dZ", static_cast<int>(ms));
  return buf;
}

void ChatSession::add_turn(std::string role, std::string text) {
  history.push_back({std::move(role), std::move(text), iso8601_now()});
}

std::vector<ChatTurn> truncate_history(const std::vector<ChatTurn>& history, const HistoryLimits& limits) {
  std::vector<std::pair<const ChatTurn*, const ChatTurn*>> pairs;
  for (std::size_t i = 0; i + 1 < history.size(); ++i) {
    if (history[i].role == "user" && history[i + 1].role == "assistant") {
      pairs.emplace_back(&history[i], &history[i + 1]);
      ++i;
    }
  }
  std::size_t keep = 0, turns = 0, chars = 0;
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) {
    std::size_t c = it->first->text.size() + it->second->text.size();
    if (turns + 2 > limits.max_turns || chars + c > limits.max_chars) break;
    turns += 2;
    chars += c;
    ++keep;
  }
  std::vector<ChatTurn> out;
  for (std::size_t i = pairs.size() - keep; i < pairs.size(); ++i) {
    out.push_back(*pairs[i].first);
    out.push_back(*pairs[i].second);
  }
  return out;
}

CompletionRequest RagPrompt::to_request(const std::string& model, double temperature, int max_tokens) const {
  return {messages, model, temperature, max_tokens};
}

std::string_view rag_prompt_template() { return kTemplate; }

RagPrompt build_rag_prompt(const ContextBlock& context, const ChatSession& session, std::string_view question,
                           const HistoryLimits& limits) {
  std::string block = context.rendered;
  // Entity names come from the corpus; keep them from reintroducing the slot.
  replace_all(block, kSlot, "(context)");
  if (context.evidence.empty() && block.find(kNoRelationsMarker) == std::string::npos) {
    block += kNoRelationsMarker;
    block += '\n';
  }
  while (!block.empty() && block.back() == '\n') block.pop_back();

  RagPrompt prompt;
  prompt.system = std::string(kTemplate);
  prompt.system.replace(prompt.system.find(kSlot), kSlot.size(), block);
  prompt.messages.push_back({"system", prompt.system});
  for (auto& turn : truncate_history(session.history, limits)) {
    prompt.messages.push_back({turn.role, turn.text});
  }
  prompt.messages.push_back({"user", std::string(question)});
  return prompt;
}

std::string linkify_trial_ids(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  walk(
      text, [&](std::string_view s) { out += s; },
      [&](std::string_view id) {
        out += '[';
        out += id;
        out += "](";
        out += kTrialUrlPrefix;
        out += id;
        out += ')';
      });
  return out;
}

std::vector<std::string> find_bare_trial_ids(std::string_view text) {
  std::vector<std::string> ids;
  walk(text, [](std::string_view) {}, [&](std::string_view id) { ids.emplace_back(id); });
  return ids;
}

std::string StreamLinkifier::push(std::string_view chunk) {
  pending_ += chunk;
  const std::string_view s = pending_;
  std::size_t safe = 0;
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (s[pos] == '[') {
      auto r = scan_link(s, pos);
      if (r.kind == LinkScan::kMatch) {
        pos = r.end;
        continue;
      }
      if (r.kind == LinkScan::kOpen) break;  // may still become a link
    } else if (text::is_space(s[pos])) {
      safe = pos + 1;
    }
    ++pos;
  }
  if (safe == 0) return {};
  std::string out = linkify_trial_ids(s.substr(0, safe));
  pending_.erase(0, safe);
  return out;
}

std::string StreamLinkifier::finish() {
  std::string out = linkify_trial_ids(pending_);
  pending_.clear();
  return out;
}

// Sessions

struct SessionStore::Lease::Slot {
  std::mutex mu;
  bool busy = false;
  ChatSession working;    // touched only by the lease holder
  ChatSession committed;  // readable snapshot
};

SessionStore::Lease::~Lease() { release(); }

void SessionStore::Lease::release() {
  if (!slot_) return;
  {
    std::lock_guard lock(slot_->mu);
    slot_->committed = slot_->working;
    slot_->busy = false;
  }
  slot_.reset();
}

ChatSession& SessionStore::Lease::session() noexcept { return slot_->working; }

void SessionStore::Lease::save() const {
  {
    std::lock_guard lock(slot_->mu);
    slot_->committed = slot_->working;
  }
  store_->persist(slot_->working);
}

SessionStore::SessionStore(std::optional<std::filesystem::path> persist_dir) : dir_(std::move(persist_dir)) {
  if (!dir_) return;
  std::filesystem::create_directories(*dir_);
  for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
    if (entry.path().extension() != ".json") continue;
    auto session = session_from_json(text::read_file(entry.path()));
    if (!valid_session_id(session.session_id)) continue;
    auto slot = std::make_shared<Lease::Slot>();
    slot->working = slot->committed = session;
    slots_.emplace(session.session_id, std::move(slot));
  }
}

std::string SessionStore::new_session_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uint64_t a = rng(), b = rng();
  std::string bytes(16, '\0');
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<char>(a >> (8 * i));
    bytes[8 + i] = static_cast<char>(b >> (8 * i));
  }
  return text::hex_encode(bytes);
}

SessionStore::Lease SessionStore::acquire(const std::optional<std::string>& session_id) {
  if (session_id && !valid_session_id(*session_id)) {
    throw std::invalid_argument("session_id must be 1-64 characters of [A-Za-z0-9_-]");
  }
  std::lock_guard lock(mu_);
  std::string id = session_id ? *session_id : new_session_id();
  auto it = slots_.find(id);
  if (it == slots_.end()) {
    auto slot = std::make_shared<Lease::Slot>();
    slot->working.session_id = id;
    slot->working.created_at = iso8601_now();
    slot->committed = slot->working;
    it = slots_.emplace(id, std::move(slot)).first;
  }
  std::lock_guard slot_lock(it->second->mu);
  if (it->second->busy) throw SessionBusy(id);
  it->second->busy = true;
  it->second->working = it->second->committed;
  return Lease(this, it->second);
}

std::optional<ChatSession> SessionStore::snapshot(std::string_view session_id) const {
  std::shared_ptr<Lease::Slot> slot;
  {
    std::lock_guard lock(mu_);
    auto it = slots_.find(session_id);
    if (it == slots_.end()) return std::nullopt;
    slot = it->second;
  }
  std::lock_guard lock(slot->mu);
  return slot->committed;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mu_);
  return slots_.size();
}

void SessionStore::persist(const ChatSession& session) const {
  if (!dir_) return;
  text::write_file(*dir_ / (session.session_id + ".json"), session_to_json(session));
}

std::string session_to_json(const ChatSession& session) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& t : session.history) {
    history.push_back({{"role", t.role}, {"text", t.text}, {"timestamp", t.timestamp}});
  }
  nlohmann::json j = {
      {"session_id", session.session_id}, {"created_at", session.created_at}, {"history", std::move(history)}};
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

ChatSession session_from_json(std::string_view json_text) {
  auto j = nlohmann::json::parse(json_text);
  ChatSession s;
  s.session_id = j.at("session_id").get<std::string>();
  s.created_at = j.value("created_at", "");
  for (const auto& t : j.at("history")) {
    s.history.push_back(
        {t.at("role").get<std::string>(), t.at("text").get<std::string>(), t.value("timestamp", "")});
  }
  return s;
}

ChatOutcome chat(ChatSession& session, std::string_view question, const ChatDeps& deps, const ChatOptions& options,
                 const std::function<void(std::string_view)>& on_chunk) {
  const auto start = std::chrono::steady_clock::now();
  ChatOutcome outcome;
  auto context = build_context(question, deps.index, deps.embedder, deps.store, deps.vocab, options.retrieval);
  outcome.evidence = context.evidence;
  outcome.prompt = build_rag_prompt(context, session, question, options.history);
  session.add_turn("user", std::string(question));

  StreamLinkifier linkifier;
  auto emit = [&](std::string piece) {
    if (piece.empty()) return;
    outcome.text += piece;
    if (on_chunk) on_chunk(piece);
  };
  try {
    deps.llm.stream(outcome.prompt.to_request(options.model, options.temperature, options.max_tokens),
                    [&](std::string_view delta) { emit(linkifier.push(delta)); });
    emit(linkifier.finish());
  } catch (const TransportError& e) {
    outcome.error = e.what();
    outcome.elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return outcome;
  }
  session.add_turn("assistant", outcome.text);
  outcome.ok = true;
  outcome.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return outcome;
}

}  // namespace kgrag
