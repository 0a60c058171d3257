#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "campus/context_model.hpp"
#include "campus/notification.hpp"
#include "campus/rule_engine.hpp"

namespace campus {

enum class ReadStatus { unread, read, deleted };

std::string_view to_string(ReadStatus status);
ReadStatus parse_read_status(std::string_view text);

struct ReadState {
  NotificationId notification_id = 0;
  TagId tag_id;
  ReadStatus state = ReadStatus::unread;

  friend bool operator==(const ReadState&, const ReadState&) = default;
};

/// Exactly one criterion must be set; validate() throws Errc::invalid_query.
struct SearchQuery {
  std::optional<std::string> poster;
  std::optional<std::chrono::year_month_day> created_on;
  std::optional<std::string> title_substring;

  void validate() const;
};

struct FeedEntry {
  Notification notification;
  bool read = false;
  MatchGround matched_via = MatchGround::preference_broadcast;

  friend bool operator==(const FeedEntry&, const FeedEntry&) = default;
};

struct SeedReport {
  std::size_t profiles = 0;
  std::size_t readers = 0;
  std::size_t notifications = 0;
  std::size_t read_states = 0;
  std::size_t added = 0;  // records that were not already present
};

// Profiles, readers, notifications and per-student read state.
//
// Mutations are serialized behind a single writer lock and, when the store is
// file-backed, appended to the data file as JSON lines and synced before the
// call returns. Reads share the lock and always see whole records.
class NotificationStore {
 public:
  NotificationStore();
  explicit NotificationStore(std::filesystem::path data_path);
  ~NotificationStore();

  NotificationStore(const NotificationStore&) = delete;
  NotificationStore& operator=(const NotificationStore&) = delete;

  void register_profile(StudentProfile profile);
  void register_reader(ReaderRegistration reader);

  Notification create_notification(NotificationDraft draft, std::string_view authenticated_sender,
                                   Instant now);
  std::vector<Notification> search(const SearchQuery& query) const;
  ReadState set_read_state(const TagId& tag_id, NotificationId notification_id, ReadStatus state);

  /// Newest-first personalized feed for a tag seen at a reader.
  /// Throws Errc::unknown_reader; an unregistered tag yields the anonymous feed.
  std::vector<FeedEntry> feed_for(const TagId& tag_id, std::string_view reader_id, Instant now) const;

  std::optional<StudentProfile> profile(const TagId& tag_id) const;
  std::optional<ReaderRegistration> reader(std::string_view reader_id) const;
  std::vector<StudentProfile> profiles() const;
  std::vector<ReaderRegistration> readers() const;
  std::vector<Notification> notifications() const;
  std::vector<ReadState> read_states() const;
  /// Distinct course ids across all profiles, compared after normalization.
  std::vector<std::string> courses() const;

  /// Canonical dump: one JSON object per line, grouped by kind, sorted by key.
  std::string export_records() const;
  /// Merges records, skipping keys that already exist. All-or-nothing.
  SeedReport seed(std::string_view jsonl);
  /// Replaces the whole store with the given dump. All-or-nothing.
  SeedReport import_records(std::string_view jsonl);

  const std::optional<std::filesystem::path>& data_path() const noexcept { return data_path_; }

 private:
  struct State {
    ProfileRegistry profiles;
    ReaderRegistry readers;
    std::vector<Notification> notifications;  // ascending id
    std::map<std::pair<TagId, NotificationId>, ReadStatus> read_states;
    NotificationId next_id = 1;
  };

  static void apply_jsonl(State& state, std::string_view jsonl, bool skip_existing, SeedReport& report,
                          std::vector<std::string>* appended);
  static std::string dump(const State& state);
  const Notification* find_notification(NotificationId id) const;
  void append_lines(const std::vector<std::string>& lines);
  void open_for_append();

  mutable std::shared_mutex mutex_;
  State state_;
  std::optional<std::filesystem::path> data_path_;
  std::FILE* file_ = nullptr;
};

}  // namespace campus
