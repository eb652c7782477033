#include "hetnet/cone_solver.hpp"

namespace hetnet::conic
{

const char* to_string(ConeStatus status)
{
    switch (status)
    {
    case ConeStatus::Optimal: return "optimal";
    case ConeStatus::PrimalInfeasible: return "primal_infeasible";
    case ConeStatus::DualInfeasible: return "dual_infeasible";
    case ConeStatus::MaxIterations: return "max_iterations";
    case ConeStatus::NumericalError: return "numerical_error";
    }
    return "unknown";
}

template class ConeSolver<double>;

} // namespace hetnet::conic
