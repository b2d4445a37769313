const echo = function (req, res) {
  var said = req.text;
  res.send(escape(said));
};
