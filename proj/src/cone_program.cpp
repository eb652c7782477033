#include "hetnet/cone_program.hpp"

#include <iomanip>

namespace hetnet::conic
{

namespace
{

void write_row(std::ostream& os, const MatXd& M, int row)
{
    for (int j = 0; j < M.cols(); ++j)
        if (M(row, j) != 0.0)
            os << ' ' << j << ':' << M(row, j);
}

} // namespace

void dump(std::ostream& os, const ConeProgram<double>& prog)
{
    const auto flags = os.flags();
    const auto precision = os.precision();
    os << std::setprecision(17);

    os << "obj";
    for (int j = 0; j < prog.num_vars(); ++j)
        if (prog.c(j) != 0.0)
            os << ' ' << j << ':' << prog.c(j);
    os << '\n';

    for (int r = 0; r < prog.num_eq(); ++r)
    {
        os << "eq " << r << " rhs=" << prog.b(r);
        write_row(os, prog.A, r);
        os << '\n';
    }

    const auto& d = prog.dims;
    int row = 0;
    for (; row < d.lp; ++row)
    {
        os << "lp " << row << " h=" << prog.h(row);
        write_row(os, prog.G, row);
        os << '\n';
    }
    for (std::size_t k = 0; k < d.soc.size(); ++k)
        for (int i = 0; i < d.soc[k]; ++i, ++row)
        {
            os << "soc " << k << ' ' << i << " h=" << prog.h(row);
            write_row(os, prog.G, row);
            os << '\n';
        }
    for (std::size_t k = 0; k < d.psd.size(); ++k)
        for (int i = 0; i < svec_size(d.psd[k]); ++i, ++row)
        {
            os << "psd " << k << ' ' << i << " h=" << prog.h(row);
            write_row(os, prog.G, row);
            os << '\n';
        }

    os.flags(flags);
    os.precision(precision);
}

} // namespace hetnet::conic
