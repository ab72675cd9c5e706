# functionals package
