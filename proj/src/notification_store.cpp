#include "campus/notification_store.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include "campus/error.hpp"
#include "campus/json_codec.hpp"

namespace campus {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

bool newest_first(const Notification& a, const Notification& b) {
  if (a.created_at != b.created_at) return a.created_at > b.created_at;
  return a.id < b.id;
}

void check_notification(const Notification& n) {
  if (trimmed(n.title).empty()) throw Error(Errc::parse_error, "title must not be empty", "title");
  if (n.created_at > to_instant(n.expiry))
    throw Error(Errc::expiry_in_past, "expiry " + format_expiry(n.expiry) + " precedes creation", "expiry");
  compile_rule(n);  // rejects empty targeting
}

template <class Vec>
auto lower_bound_id(Vec& notifications, NotificationId id) {
  return std::lower_bound(notifications.begin(), notifications.end(), id,
                          [](const Notification& a, NotificationId x) { return a.id < x; });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(ReadStatus status) {
  switch (status) {
    case ReadStatus::unread: return "unread";
    case ReadStatus::read: return "read";
    case ReadStatus::deleted: return "deleted";
  }
  return "unread";
}

ReadStatus parse_read_status(std::string_view text) {
  const std::string token = normalize_token(text);
  if (token == "unread") return ReadStatus::unread;
  if (token == "read") return ReadStatus::read;
  if (token == "deleted") return ReadStatus::deleted;
  throw Error(Errc::parse_error, "unknown read state '" + std::string(text) + "'", "state");
}

void SearchQuery::validate() const {
  const int set = static_cast<int>(poster.has_value()) + static_cast<int>(created_on.has_value()) +
                  static_cast<int>(title_substring.has_value());
  if (set != 1)
    throw Error(Errc::invalid_query, "search takes exactly one of poster, created_on, title", "query");
}

NotificationStore::NotificationStore() = default;

NotificationStore::NotificationStore(std::filesystem::path data_path) : data_path_(std::move(data_path)) {
  if (std::filesystem::exists(*data_path_)) {
    SeedReport ignored;
    apply_jsonl(state_, read_file(*data_path_), false, ignored, nullptr);
  }
  open_for_append();
}

NotificationStore::~NotificationStore() {
  if (file_) std::fclose(file_);
}

void NotificationStore::open_for_append() {
  file_ = std::fopen(data_path_->c_str(), "ab");
  if (!file_)
    throw Error(Errc::not_found, "cannot open data file '" + data_path_->string() + "' for writing", "data");
}

void NotificationStore::append_lines(const std::vector<std::string>& lines) {
  if (!file_ || lines.empty()) return;
  std::string blob;
  for (const auto& line : lines) blob += line + '\n';
  if (std::fwrite(blob.data(), 1, blob.size(), file_) != blob.size() || std::fflush(file_) != 0)
    throw Error(Errc::not_found, "write to data file failed", "data");
  ::fsync(::fileno(file_));
}

// Applies JSON lines to `state`. With skip_existing, records whose key already
// exists are ignored (seeding); otherwise later records replace earlier ones
// (replaying the append log). Lines that changed state are collected for the
// caller to persist.
void NotificationStore::apply_jsonl(State& state, std::string_view jsonl, bool skip_existing,
                                    SeedReport& report, std::vector<std::string>* appended) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    const std::size_t end = std::min(jsonl.find('\n', pos), jsonl.size());
    const std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trimmed(line).empty()) {
      if (end == jsonl.size()) break;
      continue;
    }

    codec::StoreRecord record;
    try {
      record = codec::decode_record(codec::parse(line));
      if (const auto* n = std::get_if<Notification>(&record)) check_notification(*n);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what(), e.field());
    }

    bool added = false;
    if (auto* profile = std::get_if<StudentProfile>(&record)) {
      ++report.profiles;
      auto [it, inserted] = state.profiles.try_emplace(profile->tag_id, *profile);
      if (!inserted && !skip_existing) it->second = *profile;
      added = inserted;
    } else if (auto* reader = std::get_if<ReaderRegistration>(&record)) {
      ++report.readers;
      auto [it, inserted] = state.readers.try_emplace(reader->reader_id, *reader);
      if (!inserted && !skip_existing) it->second = *reader;
      added = inserted;
    } else if (auto* n = std::get_if<Notification>(&record)) {
      ++report.notifications;
      auto it = lower_bound_id(state.notifications, n->id);
      if (it != state.notifications.end() && it->id == n->id) {
        if (!skip_existing) *it = *n;
      } else {
        state.notifications.insert(it, *n);
        state.next_id = std::max(state.next_id, n->id + 1);
        added = true;
      }
    } else {
      const auto& rs = std::get<ReadState>(record);
      ++report.read_states;
      const auto target = lower_bound_id(state.notifications, rs.notification_id);
      const bool known_notification = target != state.notifications.end() && target->id == rs.notification_id;
      if (!known_notification || !state.profiles.contains(rs.tag_id))
        throw Error(Errc::not_found,
                    "line " + std::to_string(line_no) + ": read_state refers to an unknown notification or tag",
                    "read_state");
      auto [it, inserted] = state.read_states.try_emplace({rs.tag_id, rs.notification_id}, rs.state);
      if (!inserted && !skip_existing) it->second = rs.state;
      added = inserted;
    }
    if (added) {
      ++report.added;
      if (appended) appended->push_back(codec::encode_record(record).dump());
    }
    if (end == jsonl.size()) break;
  }
}

std::string NotificationStore::dump(const State& state) {
  std::string out;
  auto emit = [&out](const codec::StoreRecord& r) { out += codec::encode_record(r).dump() + '\n'; };
  for (const auto& [tag, profile] : state.profiles) emit(profile);
  for (const auto& [id, reader] : state.readers) emit(reader);
  for (const auto& n : state.notifications) emit(n);
  std::vector<ReadState> states;
  for (const auto& [key, status] : state.read_states) states.push_back({key.second, key.first, status});
  std::sort(states.begin(), states.end(), [](const ReadState& a, const ReadState& b) {
    return std::tie(a.notification_id, a.tag_id) < std::tie(b.notification_id, b.tag_id);
  });
  for (const auto& rs : states) emit(rs);
  return out;
}

void NotificationStore::register_profile(StudentProfile profile) {
  if (profile.tag_id.empty()) throw Error(Errc::parse_error, "tag id must not be empty", "tag_id");
  std::unique_lock lock(mutex_);
  if (state_.profiles.contains(profile.tag_id))
    throw Error(Errc::duplicate, "tag '" + profile.tag_id.str() + "' is already registered", "tag_id");
  const std::string line = codec::encode_record(profile).dump();
  append_lines({line});
  state_.profiles.emplace(profile.tag_id, std::move(profile));
}

void NotificationStore::register_reader(ReaderRegistration reader) {
  if (reader.reader_id.empty()) throw Error(Errc::parse_error, "reader id must not be empty", "reader_id");
  if (normalize_token(reader.location.building_name).empty())
    throw Error(Errc::parse_error, "reader location needs a building", "building_name");
  std::unique_lock lock(mutex_);
  if (state_.readers.contains(reader.reader_id))
    throw Error(Errc::duplicate, "reader '" + reader.reader_id + "' is already registered", "reader_id");
  append_lines({codec::encode_record(reader).dump()});
  std::string key = reader.reader_id;
  state_.readers.emplace(std::move(key), std::move(reader));
}

Notification NotificationStore::create_notification(NotificationDraft draft,
                                                    std::string_view authenticated_sender, Instant now) {
  if (trimmed(draft.title).empty()) throw Error(Errc::parse_error, "title must not be empty", "title");
  if (to_instant(draft.expiry) < now)
    throw Error(Errc::expiry_in_past, "expiry " + format_expiry(draft.expiry) + " is already past", "expiry");
  if (draft.location_scope && normalize_token(*draft.location_scope).empty()) draft.location_scope.reset();

  std::unique_lock lock(mutex_);
  if (const auto* students = std::get_if<StudentTargets>(&draft.targeting)) {
    if (students->students.empty())
      throw Error(Errc::invalid_targeting, "student targeting needs at least one tag id", "targeting");
  } else if (const auto* course = std::get_if<CourseTarget>(&draft.targeting)) {
    const bool known = std::any_of(state_.profiles.begin(), state_.profiles.end(),
                                   [&](const auto& kv) { return kv.second.enrolled_in(course->course); });
    if (!known)
      throw Error(Errc::invalid_targeting, "no student is enrolled in course '" + course->course + "'",
                  "targeting");
  }

  Notification n;
  n.id = state_.next_id;
  n.title = std::move(draft.title);
  n.body = std::move(draft.body);
  n.sender_name = std::string(authenticated_sender);
  n.created_at = now;
  n.expiry = draft.expiry;
  n.targeting = std::move(draft.targeting);
  n.location_scope = std::move(draft.location_scope);
  n.details = std::move(draft.details);

  append_lines({codec::encode_record(n).dump()});
  ++state_.next_id;
  state_.notifications.push_back(n);
  return n;
}

std::vector<Notification> NotificationStore::search(const SearchQuery& query) const {
  query.validate();
  std::shared_lock lock(mutex_);
  std::vector<Notification> out;
  for (const auto& n : state_.notifications) {
    bool hit = false;
    if (query.poster) {
      hit = lower(n.sender_name) == lower(*query.poster);
    } else if (query.created_on) {
      hit = std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(n.created_at)} == *query.created_on;
    } else {
      hit = lower(n.title).find(lower(*query.title_substring)) != std::string::npos;
    }
    if (hit) out.push_back(n);
  }
  std::sort(out.begin(), out.end(), newest_first);
  return out;
}

const Notification* NotificationStore::find_notification(NotificationId id) const {
  auto it = lower_bound_id(state_.notifications, id);
  return it != state_.notifications.end() && it->id == id ? &*it : nullptr;
}

ReadState NotificationStore::set_read_state(const TagId& tag_id, NotificationId notification_id,
                                            ReadStatus state) {
  std::unique_lock lock(mutex_);
  if (!state_.profiles.contains(tag_id))
    throw Error(Errc::not_found, "tag '" + tag_id.str() + "' is not registered", "tag_id");
  if (!find_notification(notification_id))
    throw Error(Errc::not_found, "notification " + std::to_string(notification_id) + " does not exist",
                "notification_id");

  const auto key = std::make_pair(tag_id, notification_id);
  const auto it = state_.read_states.find(key);
  // Deleted is a per-student tombstone; later toggles do not bring it back.
  if (it != state_.read_states.end() && it->second == ReadStatus::deleted)
    return {notification_id, tag_id, ReadStatus::deleted};
  if (it != state_.read_states.end() && it->second == state) return {notification_id, tag_id, state};

  const ReadState record{notification_id, tag_id, state};
  append_lines({codec::encode_record(record).dump()});
  state_.read_states[key] = state;
  return record;
}

std::vector<FeedEntry> NotificationStore::feed_for(const TagId& tag_id, std::string_view reader_id,
                                                   Instant now) const {
  std::shared_lock lock(mutex_);
  const auto reader = state_.readers.find(reader_id);
  if (reader == state_.readers.end())
    throw Error(Errc::unknown_reader, "reader '" + std::string(reader_id) + "' is not registered", "reader_id");

  const auto profile = state_.profiles.find(tag_id);
  std::vector<MatchResult> matched;
  if (profile == state_.profiles.end()) {
    // Visitor card: only notifications that address no one in particular.
    Context anonymous{now, StudentProfile{tag_id, {}, {}, {}}, reader->second.location};
    std::vector<Notification> open;
    for (const auto& n : state_.notifications) {
      try {
        const Rule rule = compile_rule(n);
        if (!rule.constrains(Attribute::tag_id) && !rule.constrains(Attribute::course_id) &&
            !rule.constrains(Attribute::preference_category))
          open.push_back(n);
      } catch (const Error&) {
      }
    }
    matched = evaluate(anonymous, open);
  } else {
    std::set<NotificationId> hidden;
    for (auto it = state_.read_states.lower_bound({tag_id, 0});
         it != state_.read_states.end() && it->first.first == tag_id; ++it)
      if (it->second == ReadStatus::deleted) hidden.insert(it->first.second);
    const Context ctx{now, profile->second, reader->second.location};
    matched = evaluate(ctx, state_.notifications, hidden);
  }

  std::vector<FeedEntry> feed;
  feed.reserve(matched.size());
  for (const auto& m : matched) {
    const auto rs = state_.read_states.find({tag_id, m.notification_id});
    const bool read = rs != state_.read_states.end() && rs->second == ReadStatus::read;
    feed.push_back({*find_notification(m.notification_id), read, m.matched_via});
  }
  return feed;
}

std::optional<StudentProfile> NotificationStore::profile(const TagId& tag_id) const {
  std::shared_lock lock(mutex_);
  const auto it = state_.profiles.find(tag_id);
  if (it == state_.profiles.end()) return std::nullopt;
  return it->second;
}

std::optional<ReaderRegistration> NotificationStore::reader(std::string_view reader_id) const {
  std::shared_lock lock(mutex_);
  const auto it = state_.readers.find(reader_id);
  if (it == state_.readers.end()) return std::nullopt;
  return it->second;
}

std::vector<StudentProfile> NotificationStore::profiles() const {
  std::shared_lock lock(mutex_);
  std::vector<StudentProfile> out;
  for (const auto& [tag, p] : state_.profiles) out.push_back(p);
  return out;
}

std::vector<ReaderRegistration> NotificationStore::readers() const {
  std::shared_lock lock(mutex_);
  std::vector<ReaderRegistration> out;
  for (const auto& [id, r] : state_.readers) out.push_back(r);
  return out;
}

std::vector<Notification> NotificationStore::notifications() const {
  std::shared_lock lock(mutex_);
  return state_.notifications;
}

std::vector<ReadState> NotificationStore::read_states() const {
  std::shared_lock lock(mutex_);
  std::vector<ReadState> out;
  for (const auto& [key, status] : state_.read_states) out.push_back({key.second, key.first, status});
  return out;
}

std::vector<std::string> NotificationStore::courses() const {
  std::shared_lock lock(mutex_);
  std::map<std::string, std::string> by_key;
  for (const auto& [tag, p] : state_.profiles)
    for (const auto& c : p.course_ids) by_key.try_emplace(normalize_token(c), c);
  std::vector<std::string> out;
  for (auto& [key, surface] : by_key) out.push_back(surface);
  return out;
}

std::string NotificationStore::export_records() const {
  std::shared_lock lock(mutex_);
  return dump(state_);
}

SeedReport NotificationStore::seed(std::string_view jsonl) {
  std::unique_lock lock(mutex_);
  State staged = state_;
  SeedReport report;
  std::vector<std::string> appended;
  apply_jsonl(staged, jsonl, true, report, &appended);
  append_lines(appended);
  state_ = std::move(staged);
  return report;
}

SeedReport NotificationStore::import_records(std::string_view jsonl) {
  std::unique_lock lock(mutex_);
  State staged;
  SeedReport report;
  apply_jsonl(staged, jsonl, false, report, nullptr);
  if (data_path_) {
    const auto tmp = std::filesystem::path(data_path_->string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << dump(staged);
      out.flush();
      if (!out) throw Error(Errc::not_found, "cannot write '" + tmp.string() + "'", "data");
    }
    if (file_) std::fclose(file_);
    file_ = nullptr;
    std::filesystem::rename(tmp, *data_path_);
    open_for_append();
  }
  state_ = std::move(staged);
  return report;
}

}  // namespace campus
