#include "sqlsketch/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "sqlsketch/errors.hpp"
#include "sqlsketch/sqlite.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch {

ColumnType normalize_column_type(std::string_view declared) {
  const std::string t = text::to_upper(declared);
  if (t.find("INT") != std::string::npos) return ColumnType::Integer;
  if (t.find("CHAR") != std::string::npos || t.find("CLOB") != std::string::npos ||
      t.find("TEXT") != std::string::npos)
    return ColumnType::Text;
  if (t.find("REAL") != std::string::npos || t.find("FLOA") != std::string::npos ||
      t.find("DOUB") != std::string::npos)
    return ColumnType::Real;
  return ColumnType::Other;
}

std::string_view to_string(ColumnType type) {
  switch (type) {
    case ColumnType::Text:
      return "text";
    case ColumnType::Integer:
      return "integer";
    case ColumnType::Real:
      return "real";
    case ColumnType::Other:
      break;
  }
  return "other";
}

std::optional<std::size_t> TableDef::find_column(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (text::iequals(columns[i].name, column)) return i;
  return std::nullopt;
}

DatabaseSchema::DatabaseSchema(std::string db_name, std::vector<TableDef> tables,
                               std::vector<ForeignKeyDef> foreign_keys)
    : db_name_(std::move(db_name)), tables_(std::move(tables)), foreign_keys_(std::move(foreign_keys)) {
  if (db_name_.empty()) throw InvalidArgumentError("schema has an empty database name");
  if (tables_.empty()) throw InvalidArgumentError("schema '" + db_name_ + "' has no tables");
  for (const auto& table : tables_) {
    if (table.name.empty()) throw InvalidArgumentError("table with empty name in '" + db_name_ + "'");
    if (table.columns.empty())
      throw InvalidArgumentError("table '" + table.name + "' has no columns");
    std::set<std::string> seen;
    for (const auto& col : table.columns) {
      if (col.name.empty()) throw InvalidArgumentError("empty column name in '" + table.name + "'");
      if (!seen.insert(text::to_lower(col.name)).second)
        throw InvalidArgumentError("duplicate column '" + col.name + "' in '" + table.name + "'");
    }
  }
  for (const auto& fk : foreign_keys_) {
    bool ok = fk.from_table < tables_.size() && fk.to_table < tables_.size() &&
              fk.from_column < tables_[fk.from_table].columns.size() &&
              fk.to_column < tables_[fk.to_table].columns.size();
    if (!ok) throw InvalidArgumentError("foreign key index out of range in '" + db_name_ + "'");
    if (fk.from_table == fk.to_table && fk.from_column == fk.to_column)
      throw InvalidArgumentError("foreign key references itself in '" + db_name_ + "'");
  }
}

std::optional<std::size_t> DatabaseSchema::find_table(std::string_view table) const {
  for (std::size_t i = 0; i < tables_.size(); ++i)
    if (text::iequals(tables_[i].name, table)) return i;
  return std::nullopt;
}

namespace {

std::string fk_fragment(const ForeignKeyDef& fk) {
  return "t" + std::to_string(fk.from_table) + ".c" + std::to_string(fk.from_column) + " = t" +
         std::to_string(fk.to_table) + ".c" + std::to_string(fk.to_column);
}

template <class TableLabel, class ColumnLabel, class FkLabel>
std::string serialize_with(const DatabaseSchema& schema, TableLabel table_label,
                           ColumnLabel column_label, FkLabel fk_label) {
  std::string out = schema.db_name() + ":";
  const auto& tables = schema.tables();
  for (std::size_t t = 0; t < tables.size(); ++t) {
    out += ' ';
    out += table_label(t);
    out += " (";
    for (std::size_t c = 0; c < tables[t].columns.size(); ++c) {
      if (c) out += ", ";
      out += column_label(t, c);
    }
    out += ')';
    for (const auto& fk : schema.foreign_keys()) {
      if (fk.from_table != t) continue;
      out += ' ';
      out += fk_label(fk);
    }
  }
  return out;
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Parses canonical digits at `pos`: no leading zeros except "0" itself.
std::optional<std::size_t> parse_index(std::string_view s, std::size_t& pos) {
  std::size_t start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos == start) return std::nullopt;
  if (pos - start > 1 && s[start] == '0') return std::nullopt;
  if (pos - start > 9) return std::nullopt;
  return static_cast<std::size_t>(std::stoul(std::string(s.substr(start, pos - start))));
}

}  // namespace

std::string serialize_schema(const DatabaseSchema& schema) {
  const auto& tables = schema.tables();
  return serialize_with(
      schema, [&](std::size_t t) { return "t" + std::to_string(t) + ": " + tables[t].name; },
      [&](std::size_t t, std::size_t c) {
        return "c" + std::to_string(c) + ": " + tables[t].columns[c].name;
      },
      fk_fragment);
}

std::string serialize_schema_named(const DatabaseSchema& schema) {
  const auto& tables = schema.tables();
  return serialize_with(
      schema, [&](std::size_t t) { return tables[t].name; },
      [&](std::size_t t, std::size_t c) { return tables[t].columns[c].name; },
      [&](const ForeignKeyDef& fk) {
        return tables[fk.from_table].name + "." + tables[fk.from_table].columns[fk.from_column].name +
               " = " + tables[fk.to_table].name + "." + tables[fk.to_table].columns[fk.to_column].name;
      });
}

nlohmann::json schema_to_json(const DatabaseSchema& schema) {
  nlohmann::json tables = nlohmann::json::array();
  for (std::size_t t = 0; t < schema.tables().size(); ++t) {
    const auto& table = schema.tables()[t];
    nlohmann::json cols = nlohmann::json::array();
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      cols.push_back({{"index", "c" + std::to_string(c)},
                      {"name", table.columns[c].name},
                      {"type", std::string(to_string(table.columns[c].declared_type))}});
    }
    tables.push_back({{"index", "t" + std::to_string(t)}, {"name", table.name}, {"columns", cols}});
  }
  nlohmann::json fks = nlohmann::json::array();
  for (const auto& fk : schema.foreign_keys()) fks.push_back(fk_fragment(fk));
  return {{"db_name", schema.db_name()},
          {"tables", tables},
          {"foreign_keys", fks},
          {"serialized", serialize_schema(schema)}};
}

std::string resolve_index(const DatabaseSchema& schema, const IndexRef& ref) {
  const auto& tables = schema.tables();
  if (ref.table_index >= tables.size()) {
    throw IndexResolutionError("table index t" + std::to_string(ref.table_index) +
                               " out of range (schema '" + schema.db_name() + "' has " +
                               std::to_string(tables.size()) + " tables)");
  }
  const auto& table = tables[ref.table_index];
  if (!ref.column_index) return table.name;
  if (*ref.column_index >= table.columns.size()) {
    throw IndexResolutionError("column index t" + std::to_string(ref.table_index) + ".c" +
                               std::to_string(*ref.column_index) + " out of range (table '" +
                               table.name + "' has " + std::to_string(table.columns.size()) +
                               " columns)");
  }
  return table.name + "." + table.columns[*ref.column_index].name;
}

std::string translate_indexed_text(const DatabaseSchema& schema, std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool boundary_before = i == 0 || !is_ident_char(text[i - 1]);
    if (text[i] == 't' && boundary_before) {
      std::size_t pos = i + 1;
      auto table = parse_index(text, pos);
      if (table && (pos == text.size() || !is_ident_char(text[pos]))) {
        IndexRef ref{*table, std::nullopt};
        // Longest match: try to extend with `.c<digits>`.
        if (pos + 1 < text.size() && text[pos] == '.' && text[pos + 1] == 'c') {
          std::size_t cpos = pos + 2;
          auto column = parse_index(text, cpos);
          if (column && (cpos == text.size() || !is_ident_char(text[cpos]))) {
            ref.column_index = column;
            pos = cpos;
          }
        }
        try {
          out += resolve_index(schema, ref);
        } catch (const IndexResolutionError& e) {
          throw IndexResolutionError(std::string(e.what()) + " at offset " + std::to_string(i), i);
        }
        i = pos;
        continue;
      }
    }
    out += text[i];
    ++i;
  }
  return out;
}

DatabaseSchema load_schema(const nlohmann::json& record) {
  try {
    const std::string db_id = record.at("db_id").get<std::string>();
    const auto& table_names = record.at("table_names_original");
    const auto& column_names = record.at("column_names_original");
    const auto types = record.contains("column_types") ? record.at("column_types")
                                                       : nlohmann::json::array();
    if (!table_names.is_array() || table_names.empty())
      throw SchemaLoadError("schema '" + db_id + "' has an empty table list");

    std::vector<TableDef> tables;
    for (const auto& name : table_names) tables.push_back(TableDef{name.get<std::string>(), {}});

    // global column id -> (table, column)
    std::vector<std::optional<std::pair<std::size_t, std::size_t>>> column_pos;
    for (std::size_t id = 0; id < column_names.size(); ++id) {
      const auto& entry = column_names[id];
      const int table = entry.at(0).get<int>();
      if (table < 0) {  // synthetic `*`
        column_pos.emplace_back(std::nullopt);
        continue;
      }
      if (static_cast<std::size_t>(table) >= tables.size())
        throw SchemaLoadError("column refers to missing table index " + std::to_string(table));
      auto& cols = tables[static_cast<std::size_t>(table)].columns;
      ColumnType type = id < types.size() ? normalize_column_type(types[id].get<std::string>())
                                          : ColumnType::Other;
      // Spider records "number"/"time"/"boolean"; map the number family.
      if (id < types.size() && types[id].get<std::string>() == "number") type = ColumnType::Real;
      column_pos.emplace_back(std::make_pair(static_cast<std::size_t>(table), cols.size()));
      cols.push_back(ColumnDef{entry.at(1).get<std::string>(), type});
    }

    std::vector<ForeignKeyDef> fks;
    if (record.contains("foreign_keys")) {
      for (const auto& pair : record.at("foreign_keys")) {
        auto from = pair.at(0).get<std::size_t>();
        auto to = pair.at(1).get<std::size_t>();
        if (from >= column_pos.size() || to >= column_pos.size() || !column_pos[from] ||
            !column_pos[to])
          throw SchemaLoadError("foreign key refers to an unknown column id");
        ForeignKeyDef fk{column_pos[from]->first, column_pos[from]->second, column_pos[to]->first,
                         column_pos[to]->second};
        if (fk.from_table == fk.to_table && fk.from_column == fk.to_column) continue;
        if (std::find(fks.begin(), fks.end(), fk) == fks.end()) fks.push_back(fk);
      }
    }
    return DatabaseSchema(db_id, std::move(tables), std::move(fks));
  } catch (const SchemaLoadError&) {
    throw;
  } catch (const InvalidArgumentError& e) {
    throw SchemaLoadError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaLoadError(std::string("malformed schema record: ") + e.what());
  }
}

std::vector<DatabaseSchema> load_schema_file(const std::filesystem::path& tables_json) {
  std::ifstream in(tables_json);
  if (!in) throw SchemaLoadError("cannot read " + tables_json.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaLoadError(tables_json.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw SchemaLoadError(tables_json.string() + ": expected a JSON array");
  std::vector<DatabaseSchema> out;
  out.reserve(doc.size());
  for (const auto& record : doc) out.push_back(load_schema(record));
  return out;
}

DatabaseSchema load_schema(const std::filesystem::path& sqlite_file, std::optional<std::string> db_name) {
  auto conn = Connection::open(sqlite_file);
  std::vector<TableDef> tables;
  try {
    auto names = conn.query_all(
        "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' "
        "ORDER BY rowid");
    for (const auto& row : names) {
      TableDef table{std::get<std::string>(row[0]), {}};
      for (const auto& col : conn.query_all("PRAGMA table_info(" + quote_identifier(table.name) + ")")) {
        const std::string declared = std::holds_alternative<std::string>(col[2])
                                         ? std::get<std::string>(col[2])
                                         : std::string();
        table.columns.push_back(ColumnDef{std::get<std::string>(col[1]), normalize_column_type(declared)});
      }
      tables.push_back(std::move(table));
    }
    if (tables.empty()) throw SchemaLoadError(sqlite_file.string() + " contains no tables");

    DatabaseSchema provisional(db_name.value_or("db"), tables);
    std::vector<ForeignKeyDef> fks;
    for (std::size_t t = 0; t < tables.size(); ++t) {
      auto rows = conn.query_all("PRAGMA foreign_key_list(" + quote_identifier(tables[t].name) + ")");
      std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return std::make_pair(std::get<std::int64_t>(a[0]), std::get<std::int64_t>(a[1])) <
               std::make_pair(std::get<std::int64_t>(b[0]), std::get<std::int64_t>(b[1]));
      });
      for (const auto& row : rows) {
        // id, seq, table, from, to, ...
        auto to_table = provisional.find_table(value_to_string(row[2]));
        auto from_col = tables[t].find_column(value_to_string(row[3]));
        if (!to_table || !from_col) continue;
        std::optional<std::size_t> to_col;
        if (!is_null(row[4])) {
          to_col = tables[*to_table].find_column(value_to_string(row[4]));
        } else {
          // Implicit reference to the primary key: the first pk column.
          auto info = conn.query_all("PRAGMA table_info(" + quote_identifier(tables[*to_table].name) + ")");
          for (const auto& c : info)
            if (std::holds_alternative<std::int64_t>(c[5]) && std::get<std::int64_t>(c[5]) == 1)
              to_col = tables[*to_table].find_column(std::get<std::string>(c[1]));
        }
        if (!to_col) continue;
        ForeignKeyDef fk{t, *from_col, *to_table, *to_col};
        if (fk.from_table == fk.to_table && fk.from_column == fk.to_column) continue;
        if (std::find(fks.begin(), fks.end(), fk) == fks.end()) fks.push_back(fk);
      }
    }
    return DatabaseSchema(db_name.value_or(sqlite_file.stem().string()), std::move(tables), std::move(fks));
  } catch (const InvalidArgumentError& e) {
    throw SchemaLoadError(e.what());
  }
}

}  // namespace sqlsketch
