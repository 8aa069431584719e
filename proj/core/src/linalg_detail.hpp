#ifndef MFAC_LINALG_DETAIL_HPP
#define MFAC_LINALG_DETAIL_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace mfac::detail {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Matrix representation of P -> A' P + P A + C' P C acting on vec(P).
inline Mat lyapunov_operator(const Mat& A, const Mat& C) {
    const int d = static_cast<int>(A.rows());
    const Mat id = Mat::Identity(d, d);
    Mat L = Mat::Zero(d * d, d * d);
    auto kron_add = [&](const Mat& X, const Mat& Y) {
        // L += kron(X, Y), vec convention: vec(Y P X') = kron(X, Y) vec(P)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                L.block(i * d, j * d, d, d) += X(i, j) * Y;
    };
    // A' P  = A' P I         -> kron(I, A')
    kron_add(id, A.transpose());
    // P A   = I P A          -> kron(A', I)
    kron_add(A.transpose(), id);
    // C' P C                 -> kron(C', C')
    kron_add(C.transpose(), C.transpose());
    return L;
}

// Solve A' P + P A + C' P C + Q = 0 by vectorization (small d).
inline Mat solve_generalized_lyapunov(const Mat& A, const Mat& C, const Mat& Q) {
    const int d = static_cast<int>(A.rows());
    const Mat L = lyapunov_operator(A, C);
    Eigen::Map<const Vec> q(Q.data(), d * d);
    Vec p = L.partialPivLu().solve(-q);
    Mat P = Eigen::Map<Mat>(p.data(), d, d);
    return 0.5 * (P + P.transpose());
}

// Mean-square stability of dx = A x dt + (C x) dB: all eigenvalues of the
// Lyapunov operator must have negative real part.
inline bool mean_square_stable(const Mat& A, const Mat& C) {
    const Mat L = lyapunov_operator(A, C);
    Eigen::EigenSolver<Mat> es(L, false);
    return es.eigenvalues().real().maxCoeff() < 0.0;
}

inline bool hurwitz(const Mat& A) {
    Eigen::EigenSolver<Mat> es(A, false);
    return es.eigenvalues().real().maxCoeff() < 0.0;
}

inline double max_real_eigenvalue(const Mat& A) {
    Eigen::EigenSolver<Mat> es(A, false);
    return es.eigenvalues().real().maxCoeff();
}

inline bool positive_definite(const Mat& S) {
    Eigen::LLT<Mat> llt(0.5 * (S + S.transpose()));
    return llt.info() == Eigen::Success;
}

}  // namespace mfac::detail

#endif
