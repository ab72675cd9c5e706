# bv package
