#include "hybridhj/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace hybridhj::log {

namespace {

Level g_level = Level::warn;
std::once_flag g_init;
std::mutex g_mutex;

void init_from_env() {
    const char* env = std::getenv("HYBRIDHJ_LOG");
    if (env == nullptr) return;
    if (std::strcmp(env, "error") == 0) g_level = Level::error;
    else if (std::strcmp(env, "warn") == 0) g_level = Level::warn;
    else if (std::strcmp(env, "info") == 0) g_level = Level::info;
    else if (std::strcmp(env, "debug") == 0) g_level = Level::debug;
    else std::fprintf(stderr, "[warn] HYBRIDHJ_LOG=%s not recognized, using warn\n", env);
}

const char* tag(Level lv) {
    switch (lv) {
        case Level::error: return "error";
        case Level::warn: return "warn";
        case Level::info: return "info";
        case Level::debug: return "debug";
    }
    return "?";
}

} // namespace

Level level() {
    std::call_once(g_init, init_from_env);
    return g_level;
}

void set_level(Level lv) {
    std::call_once(g_init, init_from_env);
    g_level = lv;
}

void write(Level lv, const std::string& msg) {
    if (lv > level()) return;
    std::lock_guard<std::mutex> lock(g_mutex);
    std::fprintf(stderr, "[%s] %s\n", tag(lv), msg.c_str());
}

} // namespace hybridhj::log
