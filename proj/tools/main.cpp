#include "cli.hpp"

#include <csignal>
#include <iostream>
#include <pthread.h>

int main(int argc, char** argv)
{
    // Block termination signals in every thread; the main thread collects
    // them with sigwait.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    dxq::cli::Environment env{std::cout, std::cerr, [&signals] {
                                  int received = 0;
                                  sigwait(&signals, &received);
                              }};
    return dxq::cli::run(argc, argv, env);
}
