#pragma once

#include <csignal>
#include <pthread.h>

namespace aa::tools {

/// Blocks SIGINT/SIGTERM in this thread and every thread started after it,
/// so they can be collected with wait_for_termination().
inline sigset_t block_termination_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return set;
}

inline int wait_for_termination(const sigset_t& set) {
    int sig = 0;
    sigwait(&set, &sig);
    return sig;
}

}  // namespace aa::tools
