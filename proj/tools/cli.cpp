#include "cli.hpp"

#include <CLI11.hpp>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "turtletalk/parser.hpp"
#include "turtletalk/server.hpp"
#include "turtletalk/session.hpp"

namespace turtletalk::cli {

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string config_path;
  std::string format = "human";

  bool structured() const { return format == "structured"; }
};

SessionConfig resolve_config(const Globals& g) {
  SessionConfig c = g.config_path.empty() ? SessionConfig{} : SessionConfig::load(g.config_path);
  if (!g.backend.empty()) c.backend.name = g.backend;
  if (g.seed) c.seed = g.seed;
  if (!is_registered_backend(c.backend.name)) throw ConfigError("unknown backend: " + c.backend.name);
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::pair<std::size_t, std::size_t> line_column(std::string_view source, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < source.size(); ++i) {
    if (source[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

void emit(std::ostream& out, const SessionEvent& e, const Features& features, bool structured, bool echo) {
  if (structured) {
    out << e.to_json().dump() << '\n';
    return;
  }
  for (const auto& line : render_lines(e, features, {.echo_user = echo})) out << line << '\n';
}

// ---- check ----------------------------------------------------------------

int check(const Globals& g, const std::vector<std::string>& files, const std::string& context_name, std::ostream& out,
          std::ostream& err) {
  const auto context = parse_agent_context(context_name);
  if (!context) {
    err << "unknown agent context: " << context_name << '\n';
    return kUsage;
  }
  const auto registry = PrimitiveRegistry::builtin();
  int status = kOk;
  for (const auto& file : files) {
    std::string source;
    try {
      source = read_file(file);
    } catch (const std::exception& e) {
      err << e.what() << '\n';
      return kUsage;
    }
    const auto analysis = analyze(source, *registry, *context);
    for (const auto& d : analysis.diagnostics) {
      const auto [line, column] = line_column(source, d.span.begin);
      if (g.structured()) {
        ordered_json j;
        j["file"] = file;
        j["line"] = line;
        j["column"] = column;
        j["diagnostic"] = to_json(d);
        out << j.dump() << '\n';
      } else {
        out << file << ':' << line << ':' << column << ": " << to_string(d.severity) << ": " << d.message << '\n';
      }
    }
    const auto errors = count_errors(analysis.diagnostics);
    if (errors > 0) status = kFailed;
    if (g.structured()) {
      ordered_json j;
      j["file"] = file;
      j["errors"] = errors;
      j["ok"] = errors == 0;
      out << j.dump() << '\n';
    } else {
      out << file << ": " << (errors == 0 ? "ok" : std::to_string(errors) + " error(s)") << '\n';
    }
  }
  return status;
}

// ---- replay / render ------------------------------------------------------

int replay_files(const Globals& g, const std::vector<std::string>& files, std::ostream& out, std::ostream& err) {
  for (const auto& file : files) {
    ReplayReport report;
    try {
      report = replay(read_transcript(std::filesystem::path(file)));
    } catch (const std::exception& e) {
      err << file << ": " << e.what() << '\n';
      return kUsage;
    }
    if (g.structured()) {
      ordered_json j;
      j["file"] = file;
      j["ok"] = report.ok;
      j["compared"] = report.compared;
      j["diff"] = report.diff;
      out << j.dump() << '\n';
    } else if (report.ok) {
      out << "PASS " << file << " (" << report.compared << " engine events)\n";
    } else {
      out << "FAIL " << file << '\n' << report.diff << '\n';
    }
    if (!report.ok) return kFailed;
  }
  return kOk;
}

int render(const std::string& file, bool show_view, std::ostream& out, std::ostream& err) {
  try {
    out << render_transcript(read_transcript(std::filesystem::path(file)), {.echo_user = true, .show_view = show_view});
  } catch (const std::exception& e) {
    err << file << ": " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}

// ---- repl / record ----------------------------------------------------------

constexpr std::string_view kReplHelp =
    "Type code to run it or a message for the assistant. Other commands:\n"
    "  :1 :2 ...      choose an offered option by number\n"
    "  :run           run the code card\n"
    "  :ask TEXT      ask for a change to the code card, or paste new code\n"
    "  :back :next    move between code versions\n"
    "  :follow TEXT   ask a follow-up question\n"
    "  :quit          leave\n";

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string after_command(std::string_view line, std::string_view command) {
  auto rest = line.substr(command.size());
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  return std::string(rest);
}

/// Turns one REPL line into an event. Returns nullopt for lines that are
/// handled locally; sets `quit` on :quit.
std::optional<Event> repl_event(const std::string& line, const DialogState& dialog, bool& quit, std::ostream& err) {
  if (!line.starts_with(':')) {
    for (const auto& option : dialog.offered) {
      if (lower(option) == lower(line)) return OptionSelected{option};
    }
    return RawMessage{line};
  }
  if (line == ":quit" || line == ":q") {
    quit = true;
    return std::nullopt;
  }
  if (line == ":help") {
    err << kReplHelp;
    return std::nullopt;
  }
  if (line == ":run") return RunRequested{};
  if (line == ":back") return NavigateVersion{-1};
  if (line == ":next") return NavigateVersion{1};
  if (line.starts_with(":ask")) return AskEdit{after_command(line, ":ask")};
  if (line.starts_with(":follow")) return FollowUp{after_command(line, ":follow")};
  if (line.size() > 1 && std::all_of(line.begin() + 1, line.end(), ::isdigit)) {
    const auto n = std::stoul(line.substr(1));
    if (n >= 1 && n <= dialog.offered.size()) return OptionSelected{dialog.offered[n - 1]};
    err << "there is no option " << n << '\n';
    return std::nullopt;
  }
  err << "unknown command " << line << " (try :help)\n";
  return std::nullopt;
}

int repl(const Globals& g, const std::string& transcript_path, bool echo, std::istream& in, std::ostream& out,
         std::ostream& err) {
  const auto config = resolve_config(g);
  std::unique_ptr<TranscriptWriter> writer;
  if (!transcript_path.empty()) writer = std::make_unique<TranscriptWriter>(transcript_path);
  auto session = Session::create(config, BackendMode::inline_calls, utc_timestamp, [&](const SessionEvent& e) {
    if (writer) writer->append(e);
  });
  const auto& features = session->config().features;
  if (g.structured()) emit(out, session->transcript().front(), features, true, echo);
  bool quit = false;
  std::string line;
  while (!quit) {
    if (!echo && !g.structured()) out << kObserverPrompt << std::flush;
    if (!std::getline(in, line)) break;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto event = repl_event(line, session->dialog(), quit, err);
    if (!event) continue;
    for (const auto& e : session->handle(*event)) emit(out, e, features, g.structured(), echo);
  }
  if (!echo && !g.structured()) out << '\n';
  return kOk;
}

/// Script lines are user events as JSON objects, or plain text sent as a
/// raw message. Blank lines are skipped.
std::vector<Event> read_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<Event> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.starts_with("{")) {
      events.push_back(event_from_json(nlohmann::json::parse(line)));
      if (!is_user_event(events.back())) throw WireError("scripts may only contain user events");
    } else {
      events.push_back(RawMessage{line});
    }
  }
  return events;
}

int record(const Globals& g, const std::string& script, const std::string& out_path, std::ostream& out,
           std::ostream& err) {
  const auto config = resolve_config(g);
  std::vector<Event> events;
  try {
    events = read_script(script);
  } catch (const std::exception& e) {
    err << script << ": " << e.what() << '\n';
    return kUsage;
  }
  auto session = Session::create(config);
  for (const auto& e : events) session->handle(e);
  {
    std::ofstream file(out_path, std::ios::trunc);
    if (!file) {
      err << "cannot write " << out_path << '\n';
      return kUsage;
    }
    write_transcript(file, session->transcript());
  }
  for (const auto& e : session->transcript()) emit(out, e, session->config().features, g.structured(), true);
  return kOk;
}

// ---- serve ------------------------------------------------------------------

int serve(const Globals& g, const std::string& host, std::uint16_t port, const std::string& transcripts,
          int heartbeat_ms, std::ostream& out) {
  ServerOptions options;
  options.address = host;
  options.port = port;
  options.defaults = resolve_config(g);
  if (!transcripts.empty()) options.transcript_dir = transcripts;
  options.heartbeat = std::chrono::milliseconds(heartbeat_ms);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  SessionServer server(options);
  server.start();
  out << "serving on http://" << host << ':' << server.port() << std::endl;
  int received = 0;
  sigwait(&signals, &received);
  server.stop();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Command center for a Logo dialect with an optional coding assistant", "turtletalk"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "World random seed (recorded in transcripts)");
  app.add_option("--backend", g.backend, "Model backend name (mock or http)");
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"human", "structured"}));

  auto* repl_cmd = app.add_subcommand("repl", "Interactive command center on standard input");
  std::string transcript_path;
  bool echo = false;
  repl_cmd->add_option("--transcript", transcript_path, "Append events to this JSON-lines file");
  repl_cmd->add_flag("--echo", echo, "Echo input lines instead of printing a prompt");

  auto* check_cmd = app.add_subcommand("check", "Report diagnostics for source files");
  std::vector<std::string> check_files;
  std::string context = "observer";
  check_cmd->add_option("files", check_files, "Source files")->required();
  check_cmd->add_option("--context", context, "Agent context the code runs in");

  auto* replay_cmd = app.add_subcommand("replay", "Replay transcripts and compare engine events");
  std::vector<std::string> replay_files_list;
  replay_cmd->add_option("transcripts", replay_files_list, "Transcript files")->required();

  auto* render_cmd = app.add_subcommand("render", "Print a transcript as the command center shows it");
  std::string render_file;
  bool show_view = false;
  render_cmd->add_option("transcript", render_file, "Transcript file")->required();
  render_cmd->add_flag("--show-view", show_view, "Mention view updates");

  auto* record_cmd = app.add_subcommand("record", "Run a script of user events and save the transcript");
  std::string script;
  std::string record_out;
  record_cmd->add_option("--script", script, "One user event per line")->required();
  record_cmd->add_option("--out", record_out, "Transcript to write")->required();

  auto* serve_cmd = app.add_subcommand("serve", "HTTP and WebSocket server");
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;
  std::string transcripts;
  int heartbeat_ms = 30'000;
  serve_cmd->add_option("--host", host, "Address to bind");
  serve_cmd->add_option("--port", port, "Port to bind (0 picks one)");
  serve_cmd->add_option("--transcripts", transcripts, "Directory for per-session transcripts");
  serve_cmd->add_option("--heartbeat-ms", heartbeat_ms, "WebSocket ping interval")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*check_cmd) return check(g, check_files, context, out, err);
    if (*replay_cmd) return replay_files(g, replay_files_list, out, err);
    if (*render_cmd) return render(render_file, show_view, out, err);
    if (*record_cmd) return record(g, script, record_out, out, err);
    if (*repl_cmd) return repl(g, transcript_path, echo, in, out, err);
    if (*serve_cmd) return serve(g, host, port, transcripts, heartbeat_ms, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace turtletalk::cli
