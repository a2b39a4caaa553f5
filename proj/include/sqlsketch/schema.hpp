#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sqlsketch {

enum class ColumnType { Text, Integer, Real, Other };

/// Maps a declared SQL type to the four-way enum using SQLite affinity rules.
ColumnType normalize_column_type(std::string_view declared);
std::string_view to_string(ColumnType type);

struct ColumnDef {
  std::string name;
  ColumnType declared_type = ColumnType::Other;

  bool operator==(const ColumnDef&) const = default;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;

  /// Case-insensitive lookup.
  std::optional<std::size_t> find_column(std::string_view column) const;

  bool operator==(const TableDef&) const = default;
};

struct ForeignKeyDef {
  std::size_t from_table = 0;
  std::size_t from_column = 0;
  std::size_t to_table = 0;
  std::size_t to_column = 0;

  bool operator==(const ForeignKeyDef&) const = default;
};

/// Table t<table_index>, or column t<table_index>.c<column_index>.
struct IndexRef {
  std::size_t table_index = 0;
  std::optional<std::size_t> column_index;

  bool operator==(const IndexRef&) const = default;
};

/// Immutable once constructed; the constructor enforces every invariant, so
/// any DatabaseSchema value is valid.
class DatabaseSchema {
 public:
  DatabaseSchema(std::string db_name, std::vector<TableDef> tables,
                 std::vector<ForeignKeyDef> foreign_keys = {});

  const std::string& db_name() const noexcept { return db_name_; }
  const std::vector<TableDef>& tables() const noexcept { return tables_; }
  const std::vector<ForeignKeyDef>& foreign_keys() const noexcept { return foreign_keys_; }

  std::optional<std::size_t> find_table(std::string_view table) const;

  bool operator==(const DatabaseSchema&) const = default;

 private:
  std::string db_name_;
  std::vector<TableDef> tables_;
  std::vector<ForeignKeyDef> foreign_keys_;
};

/// `<db>: t0: <T0> (c0: <c00>, c1: <c01>) t1: ...`, with each foreign key
/// rendered as `ta.cb = tc.cd` right after its from-side table.
std::string serialize_schema(const DatabaseSchema& schema);

/// Same grammar as serialize_schema with every index token replaced by the
/// name it stands for: `<db>: <T0> (<c00>, <c01>) ... <Ta>.<cb> = <Tc>.<cd>`.
std::string serialize_schema_named(const DatabaseSchema& schema);

/// Structured form used by `serialize --json`.
nlohmann::json schema_to_json(const DatabaseSchema& schema);

std::string resolve_index(const DatabaseSchema& schema, const IndexRef& ref);

/// Replaces every `t<i>` / `t<i>.c<j>` token with its name; everything else
/// is copied byte-for-byte. A token only counts when it is not embedded in a
/// longer identifier (`t0x` or `at0` are left alone).
std::string translate_indexed_text(const DatabaseSchema& schema, std::string_view text);

/// Loads one record of a benchmark `tables.json` file.
DatabaseSchema load_schema(const nlohmann::json& tables_record);

/// Loads every record of a `tables.json` file, keyed by `db_id` order.
std::vector<DatabaseSchema> load_schema_file(const std::filesystem::path& tables_json);

/// Introspects a live SQLite database file. db_name defaults to the file stem.
DatabaseSchema load_schema(const std::filesystem::path& sqlite_file,
                           std::optional<std::string> db_name = std::nullopt);

}  // namespace sqlsketch
