# harness package
