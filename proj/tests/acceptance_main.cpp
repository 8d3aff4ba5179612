#include <iostream>

#include "stllab/acceptance.hpp"

int main() { return stllab::acceptance::run_main(std::cout); }
