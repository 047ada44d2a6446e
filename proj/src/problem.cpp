#include "ttman/problem.hpp"
