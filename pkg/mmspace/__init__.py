# mmspace package
